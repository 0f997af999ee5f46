//! Planar polygon kernel: winding numbers, perimeter, weighted areas by fan
//! quadrature (or boundary integrals when the field allows), hat-weighted edge
//! integrals and simplicity tests.

mod point;
mod polygon;
pub mod quadrature;

pub use point::Point2;
pub use polygon::{
    chain_integrals, chain_integrals_by_triangles, chain_weighted_area, diameter, is_simple, perimeter, point_segment_distance,
    resample_polygon, segment_distance, shoelace_area, vertex_centroid, winding_number,
    SimplePolygon, VertexWeights, SIMPLICITY_TOL,
};
pub use quadrature::{QuadratureSpec, ScalarField, VectorField};

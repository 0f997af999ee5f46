use std::f64::consts::PI;

use super::point::Point2;
use super::quadrature::{
    integrate_boundary, integrate_segments_hat, integrate_triangles, AsVector, QuadratureSpec, ScalarField,
    VectorField,
};
use crate::error::{Error, Result};

/// Relative tolerance (times the diameter) under which two segments are
/// considered to touch.
pub const SIMPLICITY_TOL: f64 = 1e-12;

/// A simple polygon stored with counterclockwise orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplePolygon {
    vertices: Vec<Point2>,
}

impl SimplePolygon {
    /// Validates the closed chain and reorients it counterclockwise if needed.
    pub fn new(mut vertices: Vec<Point2>) -> Result<Self> {
        validate_chain(&vertices)?;
        if shoelace_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        Ok(SimplePolygon { vertices })
    }

    /// Like [`SimplePolygon::new`] but refuses clockwise input instead of
    /// reversing it, so that vertex labels keep their meaning.
    pub fn new_ccw(vertices: Vec<Point2>) -> Result<Self> {
        validate_chain(&vertices)?;
        if shoelace_area(&vertices) <= 0.0 {
            return Err(Error::InvalidPolygon("clockwise vertex order".into()));
        }
        Ok(SimplePolygon { vertices })
    }

    /// Regular `n`-gon inscribed in the circle of given center and radius,
    /// first vertex at angle `phase`.
    pub fn regular(n: usize, center: Point2, radius: f64, phase: f64) -> Result<Self> {
        let v = (0..n)
            .map(|k| {
                let t = phase + 2.0 * PI * k as f64 / n as f64;
                center + Point2::new(t.cos(), t.sin()) * radius
            })
            .collect();
        SimplePolygon::new(v)
    }

    pub fn rectangle(min: Point2, max: Point2) -> Result<Self> {
        SimplePolygon::new(vec![
            min,
            Point2::new(max.x, min.y),
            max,
            Point2::new(min.x, max.y),
        ])
    }

    #[inline]
    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn into_vertices(self) -> Vec<Point2> {
        self.vertices
    }

    /// Edges `(x_j, x_{j+1})` in storage order.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |j| (self.vertices[j], self.vertices[(j + 1) % n]))
    }

    pub fn perimeter(&self) -> f64 {
        perimeter(&self.vertices)
    }

    pub fn area(&self) -> f64 {
        shoelace_area(&self.vertices)
    }

    pub fn centroid(&self) -> Point2 {
        vertex_centroid(&self.vertices)
    }

    pub fn diameter(&self) -> f64 {
        diameter(&self.vertices)
    }

    pub fn map(&self, f: impl Fn(Point2) -> Point2) -> Result<Self> {
        SimplePolygon::new(self.vertices.iter().map(|&p| f(p)).collect())
    }

    /// Unit tangents `tau_j` of the edges `[x_j, x_{j+1}]`.
    pub fn tangents(&self) -> Vec<Point2> {
        self.edges().map(|(a, b)| (b - a) * (1.0 / a.dist(b))).collect()
    }

    /// Outward unit normals `nu_j` of the edges.
    pub fn normals(&self) -> Vec<Point2> {
        self.tangents().into_iter().map(Point2::perp_cw).collect()
    }

    /// Gradient of the perimeter with respect to each vertex,
    /// `tau_{j-1} - tau_j`.
    pub fn perimeter_gradient(&self) -> Vec<Point2> {
        let tau = self.tangents();
        let n = tau.len();
        (0..n).map(|j| tau[(j + n - 1) % n] - tau[j]).collect()
    }

    /// Signed turn angle at each vertex, from `x_j - x_{j-1}` to
    /// `x_{j+1} - x_j`, in `(-pi, pi]`.
    pub fn exterior_angles(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|j| {
                let a = self.vertices[j] - self.vertices[(j + n - 1) % n];
                let b = self.vertices[(j + 1) % n] - self.vertices[j];
                a.cross(b).atan2(a.dot(b))
            })
            .collect()
    }

    pub fn weighted_area<F: ScalarField + ?Sized>(&self, eta: &F, quad: &QuadratureSpec) -> Result<f64> {
        chain_weighted_area(&self.vertices, eta, quad)
    }

    pub fn integrate<V: VectorField + ?Sized>(&self, field: &V, quad: &QuadratureSpec) -> Result<Vec<f64>> {
        chain_integrals(&self.vertices, field, quad)
    }

    pub fn edge_hat_integrals<F: ScalarField + ?Sized>(
        &self,
        f: &F,
        quad: &QuadratureSpec,
    ) -> Result<Vec<(f64, f64)>> {
        Ok(self
            .edge_hat_integrals_vec(&AsVector(f), quad)?
            .into_iter()
            .map(|w| (w.minus[0], w.plus[0]))
            .collect())
    }

    /// For each vertex `j`: `minus` integrates over `[x_{j-1}, x_j]` and
    /// `plus` over `[x_j, x_{j+1}]`, both against the hat function equal to 1
    /// at `x_j`.
    pub fn edge_hat_integrals_vec<V: VectorField + ?Sized>(
        &self,
        field: &V,
        quad: &QuadratureSpec,
    ) -> Result<Vec<VertexWeights>> {
        let segs: Vec<(Point2, Point2)> = self.edges().collect();
        let hats = integrate_segments_hat(&segs, field, quad)?;
        let n = self.len();
        Ok((0..n)
            .map(|j| VertexWeights {
                minus: hats[(j + n - 1) % n].toward_end.clone(),
                plus: hats[j].toward_start.clone(),
            })
            .collect())
    }

    /// Uniform-arclength resampling; see [`resample_polygon`].
    pub fn resample(&self, n_target: usize) -> Result<SimplePolygon> {
        resample_polygon(self, n_target)
    }
}

/// Hat-weighted edge integrals attached to one vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexWeights {
    pub minus: Vec<f64>,
    pub plus: Vec<f64>,
}

fn validate_chain(vertices: &[Point2]) -> Result<()> {
    if vertices.len() < 3 {
        return Err(Error::InvalidPolygon(format!(
            "need at least 3 vertices, got {}",
            vertices.len()
        )));
    }
    if vertices.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidPolygon("non-finite vertex".into()));
    }
    if !is_simple(vertices) {
        return Err(Error::InvalidPolygon("closed chain is not simple".into()));
    }
    Ok(())
}

pub fn perimeter(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    (0..n).map(|j| vertices[j].dist(vertices[(j + 1) % n])).sum()
}

/// Signed shoelace area (positive for counterclockwise order).
pub fn shoelace_area(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    0.5 * (0..n)
        .map(|j| vertices[j].cross(vertices[(j + 1) % n]))
        .sum::<f64>()
}

pub fn vertex_centroid(vertices: &[Point2]) -> Point2 {
    let s = vertices.iter().fold(Point2::ZERO, |acc, &p| acc + p);
    s * (1.0 / vertices.len() as f64)
}

pub fn diameter(vertices: &[Point2]) -> f64 {
    let mut d = 0.0f64;
    for (i, &p) in vertices.iter().enumerate() {
        for &q in &vertices[i + 1..] {
            d = d.max(p.dist(q));
        }
    }
    d
}

pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let l2 = ab.norm_sq();
    if l2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / l2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

/// Closest approach of the segments `[a, b]` and `[c, d]`.
pub fn segment_distance(a: Point2, b: Point2, c: Point2, d: Point2) -> f64 {
    let d1 = orient(a, b, c);
    let d2 = orient(a, b, d);
    let d3 = orient(c, d, a);
    let d4 = orient(c, d, b);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// True iff the closed chain `[x_1, x_2], ..., [x_n, x_1]` is simple:
/// non-adjacent edges stay apart and adjacent edges meet only at their shared
/// vertex.
pub fn is_simple(vertices: &[Point2]) -> bool {
    let n = vertices.len();
    if n < 3 {
        return false;
    }
    let diam = diameter(vertices);
    if !(diam > 0.0) {
        return false;
    }
    let tol = SIMPLICITY_TOL * diam;
    let edge = |i: usize| (vertices[i], vertices[(i + 1) % n]);
    for i in 0..n {
        let (a, b) = edge(i);
        if a.dist(b) <= tol {
            return false;
        }
    }
    // adjacent edges [a, b], [b, c]: folding back makes them overlap
    for i in 0..n {
        let a = vertices[(i + n - 1) % n];
        let b = vertices[i];
        let c = vertices[(i + 1) % n];
        if point_segment_distance(c, a, b) <= tol || point_segment_distance(a, b, c) <= tol {
            return false;
        }
    }
    let bbox = |(a, b): (Point2, Point2)| (a.x.min(b.x), a.x.max(b.x), a.y.min(b.y), a.y.max(b.y));
    let boxes: Vec<_> = (0..n).map(|i| bbox(edge(i))).collect();
    for i in 0..n {
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (bi, bj) = (boxes[i], boxes[j]);
            if bi.1 + tol < bj.0 || bj.1 + tol < bi.0 || bi.3 + tol < bj.2 || bj.3 + tol < bi.2 {
                continue;
            }
            let (a, b) = edge(i);
            let (c, d) = edge(j);
            if segment_distance(a, b, c, d) <= tol {
                return false;
            }
        }
    }
    true
}

/// Index of the closed chain around `p` (crossing-number formulation).
pub fn winding_number(vertices: &[Point2], p: Point2) -> Result<i32> {
    let n = vertices.len();
    let tol = SIMPLICITY_TOL * diameter(vertices).max(f64::MIN_POSITIVE);
    let mut wn = 0;
    for j in 0..n {
        let a = vertices[j];
        let b = vertices[(j + 1) % n];
        if point_segment_distance(p, a, b) <= tol {
            return Err(Error::PointOnBoundary { x: p.x, y: p.y });
        }
        if a.y <= p.y {
            if b.y > p.y && orient(a, b, p) > 0.0 {
                wn += 1;
            }
        } else if b.y <= p.y && orient(a, b, p) < 0.0 {
            wn -= 1;
        }
    }
    Ok(wn)
}

fn fan_triangles(vertices: &[Point2]) -> Vec<([Point2; 3], f64)> {
    let a = vertex_centroid(vertices);
    let n = vertices.len();
    (0..n)
        .filter_map(|j| {
            let p = vertices[j];
            let q = vertices[(j + 1) % n];
            let det = (p - a).cross(q - a);
            (det != 0.0).then(|| ([a, p, q], det.signum()))
        })
        .collect()
}

/// Integral of `field` against the winding number of the closed chain. For
/// a simple chain this is `+/- int_E field` with the sign of the orientation.
/// Fields with an x-antiderivative go through the boundary integral, others
/// through a fan of signed triangles from the vertex centroid.
pub fn chain_integrals<V: VectorField + ?Sized>(
    vertices: &[Point2],
    field: &V,
    quad: &QuadratureSpec,
) -> Result<Vec<f64>> {
    if field.has_x_antiderivative() {
        integrate_boundary(vertices, field, quad)
    } else {
        chain_integrals_by_triangles(vertices, field, quad)
    }
}

/// Area quadrature on the fan triangulation, regardless of the field's
/// capabilities.
pub fn chain_integrals_by_triangles<V: VectorField + ?Sized>(
    vertices: &[Point2],
    field: &V,
    quad: &QuadratureSpec,
) -> Result<Vec<f64>> {
    integrate_triangles(&fan_triangles(vertices), field, quad)
}

pub fn chain_weighted_area<F: ScalarField + ?Sized>(
    vertices: &[Point2],
    eta: &F,
    quad: &QuadratureSpec,
) -> Result<f64> {
    Ok(chain_integrals(vertices, &AsVector(eta), quad)?[0])
}

fn arclength_points(vertices: &[Point2], n_target: usize, offset: f64) -> Vec<Point2> {
    let n = vertices.len();
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    for j in 0..n {
        let l = cum[j] + vertices[j].dist(vertices[(j + 1) % n]);
        cum.push(l);
    }
    let total = cum[n];
    let step = total / n_target as f64;
    let mut out = Vec::with_capacity(n_target);
    let mut seg = 0;
    for k in 0..n_target {
        let s = (offset + k as f64) * step;
        while seg + 1 < n && cum[seg + 1] <= s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let t = if len > 0.0 { ((s - cum[seg]) / len).clamp(0.0, 1.0) } else { 0.0 };
        out.push(vertices[seg].lerp(vertices[(seg + 1) % n], t));
    }
    out
}

/// Places `n_target` vertices at uniform arclength along the boundary,
/// starting from the first vertex. If that breaks simplicity, retries once
/// with the start shifted by half a spacing.
pub fn resample_polygon(poly: &SimplePolygon, n_target: usize) -> Result<SimplePolygon> {
    if n_target < 3 {
        return Err(Error::InvalidPolygon(format!(
            "resampling target must be >= 3, got {n_target}"
        )));
    }
    for offset in [0.0, 0.5] {
        let pts = arclength_points(poly.vertices(), n_target, offset);
        if is_simple(&pts) && shoelace_area(&pts) > 0.0 {
            return Ok(SimplePolygon { vertices: pts });
        }
    }
    Err(Error::ResampleBrokeSimplicity { n_target })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn unit_square() -> Vec<Point2> {
        vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]
    }

    #[test]
    fn winding_number_examples() {
        let sq = unit_square();
        assert_eq!(winding_number(&sq, p(0.5, 0.5)).unwrap(), 1);
        assert_eq!(winding_number(&sq, p(2.0, 2.0)).unwrap(), 0);
        let mut rev = sq.clone();
        rev.reverse();
        assert_eq!(winding_number(&rev, p(0.5, 0.5)).unwrap(), -1);
        assert!(matches!(
            winding_number(&sq, p(0.5, 0.0)),
            Err(Error::PointOnBoundary { .. })
        ));
    }

    #[test]
    fn winding_number_counts_double_loops() {
        // the same triangle traversed twice
        let t = [p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0)];
        let twice: Vec<Point2> = t.iter().chain(t.iter()).copied().collect();
        assert_eq!(winding_number(&twice, p(0.2, 0.2)).unwrap(), 2);
    }

    #[test]
    fn perimeter_examples() {
        assert_eq!(perimeter(&unit_square()), 4.0);
        let hex = SimplePolygon::regular(6, Point2::ZERO, 1.0, 0.0).unwrap();
        assert!((hex.perimeter() - 6.0).abs() < 1e-14);
        assert_eq!(perimeter(&[p(0.0, 0.0), p(3.0, 0.0), p(0.0, 4.0)]), 12.0);
    }

    #[test]
    fn is_simple_examples() {
        assert!(is_simple(&[p(0.0, 0.0), p(2.0, 0.0), p(2.5, 1.0), p(0.0, 1.5)]));
        assert!(!is_simple(&[p(0.0, 0.0), p(1.0, 1.0), p(1.0, 0.0), p(0.0, 1.0)]));
        assert!(!is_simple(&[p(0.0, 0.0), p(1.0, 0.0), p(1.0, 0.0), p(0.0, 1.0)]));
        // collinear triangle folds back on itself
        assert!(!is_simple(&[p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0)]));
        // spike returning along the incoming edge
        assert!(!is_simple(&[p(0.0, 0.0), p(2.0, 0.0), p(1.0, 0.0), p(1.0, 1.0)]));
        // a vertex touching a non-adjacent edge
        assert!(!is_simple(&[
            p(0.0, 0.0),
            p(2.0, 0.0),
            p(2.0, 2.0),
            p(1.0, 0.0),
            p(0.0, 2.0)
        ]));
    }

    #[test]
    fn construction_orients_counterclockwise() {
        let mut cw = unit_square();
        cw.reverse();
        let poly = SimplePolygon::new(cw.clone()).unwrap();
        assert!(poly.area() > 0.0);
        assert!(SimplePolygon::new_ccw(cw).is_err());
        assert!(SimplePolygon::new(vec![p(0.0, 0.0), p(1.0, 1.0)]).is_err());
    }

    #[test]
    fn weighted_area_of_constant_is_signed_area() {
        let quad = QuadratureSpec::default();
        let one = |_: Point2| 1.0;
        let sq = unit_square();
        assert!((chain_weighted_area(&sq, &one, &quad).unwrap() - 1.0).abs() < 1e-14);
        let mut cw = sq.clone();
        cw.reverse();
        assert!((chain_weighted_area(&cw, &one, &quad).unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn edge_hat_integrals_of_constants() {
        let quad = QuadratureSpec::default();
        let sq = SimplePolygon::new(unit_square()).unwrap();
        for (wm, wp) in sq.edge_hat_integrals(&|_: Point2| 1.0, &quad).unwrap() {
            assert!((wm - 0.5).abs() < 1e-14 && (wp - 0.5).abs() < 1e-14);
        }
        let tri = SimplePolygon::new(vec![p(0.0, 0.0), p(3.0, 0.0), p(0.0, 4.0)]).unwrap();
        let c = 2.5;
        let w = tri.edge_hat_integrals(&|_: Point2| c, &quad).unwrap();
        let n = tri.len();
        for (j, (a, b)) in tri.edges().enumerate() {
            let half = c * a.dist(b) / 2.0;
            assert!((w[j].1 - half).abs() < 1e-13);
            assert!((w[(j + 1) % n].0 - half).abs() < 1e-13);
        }
    }

    #[test]
    fn resample_square_to_octagon() {
        let sq = SimplePolygon::new(unit_square()).unwrap();
        let oct = sq.resample(8).unwrap();
        let expect = [
            p(0.0, 0.0),
            p(0.5, 0.0),
            p(1.0, 0.0),
            p(1.0, 0.5),
            p(1.0, 1.0),
            p(0.5, 1.0),
            p(0.0, 1.0),
            p(0.0, 0.5),
        ];
        for (a, b) in oct.vertices().iter().zip(expect) {
            assert!(a.dist(b) < 1e-14);
        }
    }

    #[test]
    fn resample_uniform_polygon_is_identity() {
        let hex = SimplePolygon::regular(6, p(0.3, -0.2), 1.7, 0.4).unwrap();
        let r = hex.resample(6).unwrap();
        for (a, b) in r.vertices().iter().zip(hex.vertices()) {
            assert!(a.dist(*b) < 1e-12);
        }
    }

    #[test]
    fn resample_rejects_small_targets() {
        let sq = SimplePolygon::new(unit_square()).unwrap();
        assert!(sq.resample(2).is_err());
    }

    #[test]
    fn exterior_angles_of_square() {
        let sq = SimplePolygon::new(unit_square()).unwrap();
        for a in sq.exterior_angles() {
            assert!((a - PI / 2.0).abs() < 1e-14);
        }
        let total: f64 = SimplePolygon::regular(7, Point2::ZERO, 1.0, 0.1)
            .unwrap()
            .exterior_angles()
            .iter()
            .sum();
        assert!((total - 2.0 * PI).abs() < 1e-12);
    }
}

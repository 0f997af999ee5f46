//! Grid-free total-variation reconstruction.
//!
//! Images are represented as finite sums `u = sum_i a_i 1_{E_i}` of weighted
//! indicators of simple polygons. A fully corrective Frank-Wolfe loop adds one
//! polygon per iteration, found by maximizing the weighted Cheeger ratio
//! `|int_E eta| / P(E)` of the current dual certificate `eta`, and then jointly
//! moves amplitudes and vertices to decrease the objective.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cheeger;
pub mod error;
pub mod geometry;
pub mod grid_solver;
pub mod io;
pub mod operator;
pub mod phantom;
pub mod radial;
pub mod sparse;

pub use error::{Error, Result};

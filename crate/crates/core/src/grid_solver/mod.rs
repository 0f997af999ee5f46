//! Fixed-mesh stage of the Cheeger oracle and the fixed-grid TV baseline.
//!
//! Cell `(i, j)` (0-based, `i` along x) is
//! `[-R + i h, -R + (i+1) h] x [-R + j h, -R + (j+1) h]` with `h = 2R/N`.
//! Gradients live on the `(N+1) x (N+1)` staggered nodes, with the function
//! padded by zeros outside the square.

mod baseline;
mod contour;
mod primal_dual;

pub use baseline::{raster_measurements, raster_objective, solve_fixed_grid_tv, BaselineOutcome};
pub use contour::{extract_polygon, marching_squares, ExtractedPolygon};
pub use primal_dual::{
    operator_norm_estimate, project_l21_ball, prox_l2inf, solve_relaxed_cheeger, PrimalDualConfig,
    PrimalDualOutcome,
};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::quadrature::{integrate_rect, GaussLegendre};
use crate::geometry::{Point2, QuadratureSpec, ScalarField};

/// Piecewise-constant function on the `N x N` mesh of `[-R, R]^2`, zero
/// outside.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    n: usize,
    half_width: f64,
    values: Vec<f64>,
}

impl GridFunction {
    /// `values[j * N + i]` is the value on cell `(i, j)`.
    pub fn new(n: usize, half_width: f64, values: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidConfig(format!("grid needs N >= 2, got {n}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "grid half width must be positive, got {half_width}"
            )));
        }
        if values.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: values.len(),
            });
        }
        Ok(GridFunction { n, half_width, values })
    }

    pub fn zeros(n: usize, half_width: f64) -> Result<Self> {
        GridFunction::new(n, half_width, vec![0.0; n * n])
    }

    pub fn from_fn(n: usize, half_width: f64, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                values.push(f(i, j));
            }
        }
        GridFunction::new(n, half_width, values)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    #[inline]
    pub fn cell_size(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.n + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[j * self.n + i] = v;
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Point2 {
        let h = self.cell_size();
        Point2::new(
            -self.half_width + (i as f64 + 0.5) * h,
            -self.half_width + (j as f64 + 0.5) * h,
        )
    }

    pub fn cell_bounds(&self, i: usize, j: usize) -> ((f64, f64), (f64, f64)) {
        let h = self.cell_size();
        let x0 = -self.half_width + i as f64 * h;
        let y0 = -self.half_width + j as f64 * h;
        ((x0, x0 + h), (y0, y0 + h))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn dot(&self, other: &GridFunction) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&mut self, f: f64) {
        self.values.iter_mut().for_each(|v| *v *= f);
    }

    /// Value at a point (zero outside the square; cell boundaries belong to
    /// the cell above/right).
    pub fn value_at(&self, p: Point2) -> f64 {
        let h = self.cell_size();
        let fi = ((p.x + self.half_width) / h).floor();
        let fj = ((p.y + self.half_width) / h).floor();
        if fi < 0.0 || fj < 0.0 || fi >= self.n as f64 || fj >= self.n as f64 {
            return 0.0;
        }
        self.get(fi as usize, fj as usize)
    }

    /// Relaxed perimeter `J^h(u) = h |grad^h u|_{2,1}`.
    pub fn discrete_tv(&self) -> f64 {
        self.cell_size() * discrete_gradient(self).norm_21()
    }

    /// `h |grad^h u|_{1,1}`, the exact total variation of the piecewise
    /// constant function.
    pub fn exact_tv(&self) -> f64 {
        self.cell_size() * discrete_gradient(self).norm_11()
    }
}

/// Forward differences on the `(N+1) x (N+1)` nodes, stored as
/// `gx[j * (N+1) + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridGradient {
    pub n: usize,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
}

impl GridGradient {
    pub fn zeros(n: usize) -> Self {
        let k = (n + 1) * (n + 1);
        GridGradient {
            n,
            gx: vec![0.0; k],
            gy: vec![0.0; k],
        }
    }

    pub fn norm_21(&self) -> f64 {
        self.gx.iter().zip(&self.gy).map(|(a, b)| a.hypot(*b)).sum()
    }

    pub fn norm_11(&self) -> f64 {
        self.gx.iter().zip(&self.gy).map(|(a, b)| a.abs() + b.abs()).sum()
    }

    pub fn dot(&self, other: &GridGradient) -> f64 {
        let x: f64 = self.gx.iter().zip(&other.gx).map(|(a, b)| a * b).sum();
        let y: f64 = self.gy.iter().zip(&other.gy).map(|(a, b)| a * b).sum();
        x + y
    }
}

/// `grad^h u` into preallocated buffers.
pub(crate) fn gradient_into(u: &[f64], n: usize, gx: &mut [f64], gy: &mut [f64]) {
    let m = n + 1;
    // padded value at 1-based (k, l)
    let at = |k: usize, l: usize| -> f64 {
        if k == 0 || l == 0 || k > n || l > n {
            0.0
        } else {
            u[(l - 1) * n + (k - 1)]
        }
    };
    for j in 0..m {
        for i in 0..m {
            let c = at(i, j);
            gx[j * m + i] = at(i + 1, j) - c;
            gy[j * m + i] = at(i, j + 1) - c;
        }
    }
}

/// `div^h`, the negative adjoint of `grad^h`.
pub(crate) fn divergence_into(gx: &[f64], gy: &[f64], n: usize, out: &mut [f64]) {
    let m = n + 1;
    for l in 1..=n {
        for k in 1..=n {
            let idx = l * m + k;
            out[(l - 1) * n + (k - 1)] = gx[idx] - gx[idx - 1] + gy[idx] - gy[idx - m];
        }
    }
}

pub fn discrete_gradient(u: &GridFunction) -> GridGradient {
    let mut g = GridGradient::zeros(u.n);
    gradient_into(&u.values, u.n, &mut g.gx, &mut g.gy);
    g
}

/// `div^h phi`, so that `<grad^h u, phi> = <u, -div^h phi>`.
pub fn discrete_divergence(phi: &GridGradient, half_width: f64) -> Result<GridFunction> {
    let mut out = vec![0.0; phi.n * phi.n];
    divergence_into(&phi.gx, &phi.gy, phi.n, &mut out);
    GridFunction::new(phi.n, half_width, out)
}

/// Cell averages `(1/h^2) int_C eta`, each by adaptive tensor Gauss-Legendre.
pub fn discretize_field<F: ScalarField + ?Sized>(
    eta: &F,
    half_width: f64,
    n: usize,
    quad: &QuadratureSpec,
) -> Result<GridFunction> {
    quad.validate()?;
    let grid = GridFunction::zeros(n, half_width)?;
    let h = grid.cell_size();
    let rule = GaussLegendre::new(quad.edge_rule_order);
    let coarse = |i: usize, j: usize| -> f64 {
        let ((x0, _), (y0, _)) = grid.cell_bounds(i, j);
        let mut s = 0.0;
        for (nx, wx) in rule.nodes.iter().zip(&rule.weights) {
            for (ny, wy) in rule.nodes.iter().zip(&rule.weights) {
                s += wx * wy * eta.eval(Point2::new(x0 + h * nx, y0 + h * ny));
            }
        }
        s
    };
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|j| (0..n).map(move |i| (i, j))).collect();
    let scale = cells
        .par_iter()
        .map(|&(i, j)| coarse(i, j).abs())
        .reduce(|| 0.0, f64::max);
    if scale == 0.0 {
        return Ok(grid);
    }
    let tol = quad.refine_tol * scale * h * h;
    let values = cells
        .par_iter()
        .map(|&(i, j)| {
            let (bx, by) = grid.cell_bounds(i, j);
            integrate_rect(eta, bx, by, &rule, tol, quad.max_subdivision_depth).map(|v| v / (h * h))
        })
        .collect::<Result<Vec<f64>>>()?;
    GridFunction::new(n, half_width, values)
}

//! Sampled Gaussian measurement operator.
//!
//! `Phi u = (int u(x) phi_j(x) dx)_j` with
//! `phi_j(x) = exp(-|x - c_j|^2 / (2 sigma^2))`. Kernels are evaluated without
//! any cutoff radius.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::quadrature::QuadratureSpec;
use crate::geometry::{Point2, ScalarField, SimplePolygon, VectorField, VertexWeights};
use crate::sparse::AtomicFunction;

/// Centers that share coordinates on a tensor grid let each evaluation
/// compute `nx + ny` exponentials instead of `m`.
#[derive(Debug, Clone, PartialEq)]
struct SeparableIndex {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ix: Vec<usize>,
    iy: Vec<usize>,
}

impl SeparableIndex {
    fn build(centers: &[Point2]) -> Option<Self> {
        fn uniq(v: impl Iterator<Item = f64>) -> Vec<f64> {
            let mut u: Vec<f64> = v.collect();
            u.sort_by(|a, b| a.total_cmp(b));
            u.dedup();
            u
        }
        let xs = uniq(centers.iter().map(|c| c.x));
        let ys = uniq(centers.iter().map(|c| c.y));
        if xs.len() + ys.len() >= centers.len() {
            return None;
        }
        let find = |v: &[f64], t: f64| v.binary_search_by(|a| a.total_cmp(&t)).unwrap();
        Some(SeparableIndex {
            ix: centers.iter().map(|c| find(&xs, c.x)).collect(),
            iy: centers.iter().map(|c| find(&ys, c.y)).collect(),
            xs,
            ys,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianOperator {
    centers: Vec<Point2>,
    sigma: f64,
    inv_two_sigma_sq: f64,
    separable: Option<SeparableIndex>,
}

impl GaussianOperator {
    pub fn new(centers: Vec<Point2>, sigma: f64) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::InvalidConfig("operator needs at least one center".into()));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("sigma must be positive, got {sigma}")));
        }
        if centers.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig("non-finite sampling center".into()));
        }
        let separable = SeparableIndex::build(&centers);
        Ok(GaussianOperator {
            centers,
            sigma,
            inv_two_sigma_sq: 1.0 / (2.0 * sigma * sigma),
            separable,
        })
    }

    /// `per_side x per_side` centers on the uniform grid spanning
    /// `[-half_width, half_width]^2`, endpoints included. A single center sits
    /// at the origin.
    pub fn grid(half_width: f64, per_side: usize, sigma: f64) -> Result<Self> {
        if per_side == 0 {
            return Err(Error::InvalidConfig("grid needs at least one center per side".into()));
        }
        let coord = |k: usize| {
            if per_side == 1 {
                0.0
            } else {
                -half_width + 2.0 * half_width * k as f64 / (per_side - 1) as f64
            }
        };
        let mut centers = Vec::with_capacity(per_side * per_side);
        for j in 0..per_side {
            for i in 0..per_side {
                centers.push(Point2::new(coord(i), coord(j)));
            }
        }
        GaussianOperator::new(centers, sigma)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[Point2] {
        &self.centers
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `phi_j(p)` by direct evaluation.
    #[inline]
    pub fn kernel(&self, j: usize, p: Point2) -> f64 {
        (-(p - self.centers[j]).norm_sq() * self.inv_two_sigma_sq).exp()
    }

    /// Column `Phi 1_E`.
    pub fn sensing_integrals(&self, poly: &SimplePolygon, quad: &QuadratureSpec) -> Result<Vec<f64>> {
        poly.integrate(self, quad)
    }

    pub fn forward(&self, u: &AtomicFunction, quad: &QuadratureSpec) -> Result<Measurements> {
        let mut out = vec![0.0; self.len()];
        for atom in u.atoms() {
            let col = self.sensing_integrals(&atom.support, quad)?;
            for (o, c) in out.iter_mut().zip(col) {
                *o += atom.amplitude * c;
            }
        }
        Ok(Measurements::new(out))
    }

    /// `x -> sum_j coeffs_j phi_j(x)`. The Frank-Wolfe certificate uses
    /// `coeffs = -(Phi u - y) / lambda`.
    pub fn dual_field(&self, coeffs: Vec<f64>) -> Result<DualField<'_>> {
        if coeffs.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: coeffs.len(),
            });
        }
        Ok(DualField { op: self, coeffs })
    }

    /// Per-vertex hat-weighted edge integrals of every sensing function.
    pub fn edge_measurement_weights(
        &self,
        poly: &SimplePolygon,
        quad: &QuadratureSpec,
    ) -> Result<Vec<VertexWeights>> {
        poly.edge_hat_integrals_vec(self, quad)
    }

    fn separable_factors(&self, sep: &SeparableIndex, p: Point2) -> (Vec<f64>, Vec<f64>) {
        let ex = sep
            .xs
            .iter()
            .map(|x| (-(p.x - x) * (p.x - x) * self.inv_two_sigma_sq).exp())
            .collect();
        let ey = sep
            .ys
            .iter()
            .map(|y| (-(p.y - y) * (p.y - y) * self.inv_two_sigma_sq).exp())
            .collect();
        (ex, ey)
    }

    /// `F_j(p) = sigma sqrt(pi/2) erfc(-(x - c_x) / (sigma sqrt 2)) exp(-(y - c_y)^2 / (2 sigma^2))`,
    /// the antiderivative of `phi_j` in x vanishing at `x = -inf`.
    #[inline]
    fn antiderivative_x(&self, dx: f64) -> f64 {
        self.sigma * (PI / 2.0).sqrt() * libm::erfc(-dx / (self.sigma * std::f64::consts::SQRT_2))
    }

    fn antiderivative_into(&self, p: Point2, out: &mut [f64]) {
        match &self.separable {
            Some(sep) => {
                let fx: Vec<f64> = sep.xs.iter().map(|x| self.antiderivative_x(p.x - x)).collect();
                let ey: Vec<f64> = sep
                    .ys
                    .iter()
                    .map(|y| (-(p.y - y) * (p.y - y) * self.inv_two_sigma_sq).exp())
                    .collect();
                for (j, o) in out.iter_mut().enumerate() {
                    *o = fx[sep.ix[j]] * ey[sep.iy[j]];
                }
            }
            None => {
                for (o, c) in out.iter_mut().zip(&self.centers) {
                    let dy = p.y - c.y;
                    *o = self.antiderivative_x(p.x - c.x) * (-dy * dy * self.inv_two_sigma_sq).exp();
                }
            }
        }
    }
}

impl VectorField for GaussianOperator {
    fn dim(&self) -> usize {
        self.len()
    }

    fn eval_into(&self, p: Point2, out: &mut [f64]) {
        match &self.separable {
            Some(sep) => {
                let (ex, ey) = self.separable_factors(sep, p);
                for (j, o) in out.iter_mut().enumerate() {
                    *o = ex[sep.ix[j]] * ey[sep.iy[j]];
                }
            }
            None => {
                for (j, o) in out.iter_mut().enumerate() {
                    *o = self.kernel(j, p);
                }
            }
        }
    }

    fn has_x_antiderivative(&self) -> bool {
        true
    }

    fn x_antiderivative_into(&self, p: Point2, out: &mut [f64]) {
        self.antiderivative_into(p, out);
    }
}

/// Observation vector `y`, one entry per sensing function.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurements {
    pub values: Vec<f64>,
}

impl Measurements {
    pub fn new(values: Vec<f64>) -> Self {
        Measurements { values }
    }

    pub fn zeros(m: usize) -> Self {
        Measurements { values: vec![0.0; m] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.values.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn sub(&self, other: &Measurements) -> Measurements {
        Measurements::new(self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect())
    }
}

/// `eta(x) = sum_j coeffs_j phi_j(x)`.
#[derive(Debug, Clone)]
pub struct DualField<'a> {
    op: &'a GaussianOperator,
    coeffs: Vec<f64>,
}

impl DualField<'_> {
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn operator(&self) -> &GaussianOperator {
        self.op
    }

    /// Negated field, `-eta`.
    pub fn negated(&self) -> Self {
        DualField {
            op: self.op,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// `int_{[-R,R]^2} eta^2`, in closed form; `None` gives the integral over
    /// the plane.
    pub fn l2_mass(&self, half_width: Option<f64>) -> f64 {
        let s = self.op.sigma;
        let centers = &self.op.centers;
        // phi_j phi_k = exp(-|c_j - c_k|^2 / 4s^2) exp(-|x - mid|^2 / s^2)
        let side = |m: f64| match half_width {
            Some(r) => 0.5 * s * PI.sqrt() * (libm::erf((r - m) / s) + libm::erf((r + m) / s)),
            None => s * PI.sqrt(),
        };
        let active: Vec<usize> = (0..centers.len()).filter(|&j| self.coeffs[j] != 0.0).collect();
        active
            .par_iter()
            .map(|&j| {
                active
                    .iter()
                    .map(|&k| {
                        let (a, b) = (centers[j], centers[k]);
                        let w = (-(a - b).norm_sq() / (4.0 * s * s)).exp();
                        self.coeffs[j] * self.coeffs[k] * w * side(0.5 * (a.x + b.x)) * side(0.5 * (a.y + b.y))
                    })
                    .sum::<f64>()
            })
            .collect::<Vec<f64>>()
            .iter()
            // sequential so the result does not depend on the thread count
            .sum::<f64>()
            .max(0.0)
    }

    /// Smallest `R` (to relative precision 1e-6) such that `[-R, R]^2`
    /// holds `fraction` of the L2 mass of `eta`.
    pub fn mass_radius(&self, fraction: f64) -> Result<f64> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::InvalidConfig(format!("mass fraction must be in (0, 1), got {fraction}")));
        }
        let total = self.l2_mass(None);
        if total == 0.0 {
            return Err(Error::NoContourFound);
        }
        let reach = self.op.centers.iter().fold(0.0f64, |m, c| m.max(c.x.abs()).max(c.y.abs()));
        let (mut lo, mut hi) = (0.0, reach + 10.0 * self.op.sigma);
        while hi - lo > 1e-6 * hi {
            let mid = 0.5 * (lo + hi);
            if self.l2_mass(Some(mid)) >= fraction * total {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

impl ScalarField for DualField<'_> {
    fn eval(&self, p: Point2) -> f64 {
        match &self.op.separable {
            Some(sep) => {
                let (ex, ey) = self.op.separable_factors(sep, p);
                self.coeffs
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c * ex[sep.ix[j]] * ey[sep.iy[j]])
                    .sum()
            }
            None => self
                .coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| c * self.op.kernel(j, p))
                .sum(),
        }
    }
    fn has_x_antiderivative(&self) -> bool {
        true
    }

    fn x_antiderivative(&self, p: Point2) -> f64 {
        let mut buf = vec![0.0; self.op.len()];
        self.op.antiderivative_into(p, &mut buf);
        buf.iter().zip(&self.coeffs).map(|(f, c)| f * c).sum()
    }
}

/// `lambda = c * sqrt(2 log(m) tau^2)`.
pub fn calibrated_lambda(c: f64, m: usize, tau: f64) -> f64 {
    c * (2.0 * (m as f64).ln() * tau * tau).sqrt()
}

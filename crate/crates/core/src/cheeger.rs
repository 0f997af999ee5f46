//! Polygonal refinement of Cheeger sets: ascent on `J(E) = |int_E eta| / P(E)`
//! over simple polygons with a fixed number of vertices.

use std::f64::consts::PI;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, QuadratureSpec, ScalarField, SimplePolygon};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineConfig {
    pub max_iters: usize,
    /// First trial displacement of each iteration, as a fraction of the
    /// diameter, for the vertex with the largest gradient.
    pub step_init: f64,
    pub armijo_c: f64,
    pub step_shrink: f64,
    /// Stop when `|theta| diam / J < grad_tol`.
    pub grad_tol: f64,
    /// Smallest trial displacement, relative to the diameter.
    pub min_step: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            max_iters: 500,
            step_init: 0.1,
            armijo_c: 1e-4,
            step_shrink: 0.5,
            grad_tol: 1e-6,
            min_step: 1e-10,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.step_init, self.armijo_c, self.step_shrink, self.grad_tol, self.min_step];
        if positive.iter().any(|v| !(*v > 0.0)) || self.max_iters == 0 {
            return Err(Error::InvalidConfig("refine parameters must be positive".into()));
        }
        if self.armijo_c >= 1.0 || self.step_shrink >= 1.0 {
            return Err(Error::InvalidConfig("armijo_c and step_shrink must be below 1".into()));
        }
        Ok(())
    }
}

/// `|int_E eta| / P(E)`.
pub fn cheeger_objective<F: ScalarField + ?Sized>(
    poly: &SimplePolygon,
    eta: &F,
    quad: &QuadratureSpec,
) -> Result<f64> {
    Ok(poly.weighted_area(eta, quad)?.abs() / poly.perimeter())
}

/// Objective and its vertex gradient at one polygon.
#[derive(Debug, Clone)]
pub struct ShapeGradient {
    pub objective: f64,
    pub weighted_area: f64,
    pub perimeter: f64,
    pub theta: Vec<Point2>,
}

impl ShapeGradient {
    pub fn norm(&self) -> f64 {
        self.theta.iter().map(|t| t.norm_sq()).sum::<f64>().sqrt()
    }

    pub fn max_norm(&self) -> f64 {
        self.theta.iter().fold(0.0f64, |m, t| m.max(t.norm()))
    }
}

/// Gradient of `J` with respect to the vertices:
/// `theta_j = (P s dA_j - |A| dP_j) / P^2` with `s = sign(A)`,
/// `dA_j = w_j^- nu_{j-1} + w_j^+ nu_j` and `dP_j = tau_{j-1} - tau_j`.
pub fn shape_gradient_full<F: ScalarField + ?Sized>(
    poly: &SimplePolygon,
    eta: &F,
    quad: &QuadratureSpec,
) -> Result<ShapeGradient> {
    let area = poly.weighted_area(eta, quad)?;
    let p = poly.perimeter();
    let w = poly.edge_hat_integrals(eta, quad)?;
    let nu = poly.normals();
    let dp = poly.perimeter_gradient();
    let n = poly.len();
    let s = if area >= 0.0 { 1.0 } else { -1.0 };
    let theta = (0..n)
        .map(|j| {
            let da = nu[(j + n - 1) % n] * w[j].0 + nu[j] * w[j].1;
            (da * (p * s) - dp[j] * area.abs()) * (1.0 / (p * p))
        })
        .collect();
    Ok(ShapeGradient {
        objective: area.abs() / p,
        weighted_area: area,
        perimeter: p,
        theta,
    })
}

/// Steepest-ascent direction of `J` at the polygon, one vector per vertex.
pub fn shape_gradient<F: ScalarField + ?Sized>(
    poly: &SimplePolygon,
    eta: &F,
    quad: &QuadratureSpec,
) -> Result<Vec<Point2>> {
    Ok(shape_gradient_full(poly, eta, quad)?.theta)
}

const ANGLE_EPS: f64 = 1e-9;

/// Discrete first-order optimality gap: the largest deviation of
/// `w_j^+` and `w_j^-` from `rho tan(theta_j / 2)`, `rho = int_E eta / P`,
/// scaled by `|rho| P / n`.
pub fn optimality_residual<F: ScalarField + ?Sized>(
    poly: &SimplePolygon,
    eta: &F,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let angles = poly.exterior_angles();
    for (j, a) in angles.iter().enumerate() {
        // straight (tan = 0) and folded (tan = inf) vertices cannot satisfy
        // the condition with nonzero weights
        if a.abs() < ANGLE_EPS || a.abs() > PI - ANGLE_EPS {
            return Err(Error::DegenerateAngle { vertex: j });
        }
    }
    let area = poly.weighted_area(eta, quad)?;
    let p = poly.perimeter();
    let rho = area / p;
    let w = poly.edge_hat_integrals(eta, quad)?;
    let n = poly.len() as f64;
    let scale = rho.abs() * p / n;
    if scale == 0.0 {
        return Ok(f64::INFINITY);
    }
    let worst = angles
        .iter()
        .zip(&w)
        .map(|(a, (wm, wp))| {
            let target = rho * (a / 2.0).tan();
            (wm - target).abs().max((wp - target).abs())
        })
        .fold(0.0f64, f64::max);
    Ok(worst / scale)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineRecord {
    pub iter: usize,
    pub objective: f64,
    pub step: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefineStop {
    GradientTolerance,
    MinStep,
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub polygon: SimplePolygon,
    pub objective: f64,
    pub initial_objective: f64,
    pub iterations: usize,
    pub stop: RefineStop,
    pub trace: Vec<RefineRecord>,
}

/// Gradient ascent `x <- x + alpha theta` with Armijo backtracking on `J`.
/// The first trial step of each iteration is the Barzilai-Borwein step,
/// capped at a displacement of `step_init * diam`.
/// Trial polygons that are not simple (or flip orientation) count as
/// failed steps. `J` never decreases along the accepted iterates.
pub fn refine<F: ScalarField + ?Sized>(
    poly0: &SimplePolygon,
    eta: &F,
    cfg: &RefineConfig,
    quad: &QuadratureSpec,
) -> Result<RefineOutcome> {
    cfg.validate()?;
    let mut poly = poly0.clone();
    let mut g = shape_gradient_full(&poly, eta, quad)?;
    let initial_objective = g.objective;
    let mut trace = Vec::new();
    let mut stop = RefineStop::MaxIters;
    let mut iterations = 0;

    // previous iterate and gradient, for Barzilai-Borwein trial steps
    let mut prev: Option<(Vec<Point2>, Vec<Point2>)> = None;
    for it in 0..cfg.max_iters {
        let diam = poly.diameter();
        let gnorm = g.norm();
        if g.objective == 0.0 || gnorm * diam / g.objective < cfg.grad_tol {
            stop = RefineStop::GradientTolerance;
            break;
        }
        let gmax = g.max_norm();
        let cap = cfg.step_init * diam / gmax;
        let mut alpha = match &prev {
            Some((x0, g0)) => bb_step(x0, g0, poly.vertices(), &g.theta).map_or(cap, |a| a.min(cap)),
            None => cap,
        };
        let mut accepted = None;
        let mut any_simple = false;
        while alpha * gmax >= cfg.min_step * diam {
            let moved: Vec<Point2> = poly
                .vertices()
                .iter()
                .zip(&g.theta)
                .map(|(&x, &t)| x + t * alpha)
                .collect();
            if let Ok(trial) = SimplePolygon::new_ccw(moved) {
                any_simple = true;
                let value = cheeger_objective(&trial, eta, quad)?;
                if value >= g.objective + cfg.armijo_c * alpha * gnorm * gnorm {
                    accepted = Some(trial);
                    break;
                }
            }
            alpha *= cfg.step_shrink;
        }
        let Some(next) = accepted else {
            if !any_simple {
                return Err(Error::StalledAtNonSimple);
            }
            stop = RefineStop::MinStep;
            break;
        };
        prev = Some((poly.vertices().to_vec(), g.theta.clone()));
        poly = next;
        g = shape_gradient_full(&poly, eta, quad)?;
        iterations = it + 1;
        trace.push(RefineRecord {
            iter: iterations,
            objective: g.objective,
            step: alpha,
            grad_norm: g.norm(),
        });
    }
    debug!(
        "refine: J {initial_objective:.6e} -> {:.6e} in {iterations} iterations ({stop:?})",
        g.objective
    );
    Ok(RefineOutcome {
        polygon: poly,
        objective: g.objective,
        initial_objective,
        iterations,
        stop,
        trace,
    })
}

/// `|s|^2 / <s, y>` for the ascent problem (`y = g_old - g_new`), if the
/// curvature is positive.
pub(crate) fn bb_step(x0: &[Point2], g0: &[Point2], x1: &[Point2], g1: &[Point2]) -> Option<f64> {
    let mut ss = 0.0;
    let mut sy = 0.0;
    for k in 0..x0.len() {
        let s = x1[k] - x0[k];
        let y = g0[k] - g1[k];
        ss += s.norm_sq();
        sy += s.dot(y);
    }
    (sy > 0.0 && ss > 0.0).then(|| ss / sy)
}

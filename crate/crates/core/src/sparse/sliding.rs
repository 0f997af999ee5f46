//! Sliding step: joint descent on amplitudes and vertex positions of all
//! atoms, with `T_lambda` as merit function.

use log::debug;
use serde::{Deserialize, Serialize};

use super::{Atom, AtomicFunction};
use crate::cheeger::{RefineRecord, RefineStop};
use crate::error::{Error, Result};
use crate::geometry::{Point2, QuadratureSpec, SimplePolygon};
use crate::operator::{GaussianOperator, Measurements};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlideConfig {
    pub max_iters: usize,
    /// Largest first trial move: a fraction of each atom's diameter for
    /// vertices and of its magnitude for amplitudes.
    pub step_init: f64,
    pub armijo_c: f64,
    pub step_shrink: f64,
    /// Stop when the preconditioned gradient norm times the largest
    /// diameter falls below `grad_tol T`.
    pub grad_tol: f64,
    pub min_step: f64,
}

impl Default for SlideConfig {
    fn default() -> Self {
        SlideConfig {
            max_iters: 1000,
            step_init: 0.1,
            armijo_c: 1e-4,
            step_shrink: 0.5,
            grad_tol: 1e-5,
            min_step: 1e-10,
        }
    }
}

impl SlideConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.step_init, self.armijo_c, self.step_shrink, self.grad_tol, self.min_step];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidConfig("slide parameters must be positive".into()));
        }
        if self.armijo_c >= 1.0 || self.step_shrink >= 1.0 {
            return Err(Error::InvalidConfig("armijo_c and step_shrink must be below 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SlideOutcome {
    pub u: AtomicFunction,
    pub objective: f64,
    pub initial_objective: f64,
    pub iterations: usize,
    pub stop: RefineStop,
    pub trace: Vec<RefineRecord>,
}

/// Gradient of `T_lambda` with respect to the amplitudes (`amplitude`) and
/// the vertices of every atom (`vertices`).
#[derive(Debug, Clone, PartialEq)]
pub struct SlidingGradient {
    pub objective: f64,
    pub amplitude: Vec<f64>,
    pub vertices: Vec<Vec<Point2>>,
}

struct State {
    objective: f64,
    residual: Vec<f64>,
    columns: Vec<Vec<f64>>,
}

fn evaluate(
    atoms: &[Atom],
    op: &GaussianOperator,
    y: &Measurements,
    lambda: f64,
    quad: &QuadratureSpec,
) -> Result<State> {
    let columns = atoms
        .iter()
        .map(|a| op.sensing_integrals(&a.support, quad))
        .collect::<Result<Vec<_>>>()?;
    let mut residual: Vec<f64> = y.values.iter().map(|v| -v).collect();
    for (a, c) in atoms.iter().zip(&columns) {
        for (r, ck) in residual.iter_mut().zip(c) {
            *r += a.amplitude * ck;
        }
    }
    let tv: f64 = atoms.iter().map(|a| a.amplitude.abs() * a.support.perimeter()).sum();
    let objective = 0.5 * residual.iter().map(|r| r * r).sum::<f64>() + lambda * tv;
    Ok(State {
        objective,
        residual,
        columns,
    })
}

fn gradient_at(
    atoms: &[Atom],
    state: &State,
    op: &GaussianOperator,
    lambda: f64,
    quad: &QuadratureSpec,
) -> Result<SlidingGradient> {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let r = &state.residual;
    let mut amplitude = Vec::with_capacity(atoms.len());
    let mut vertices = Vec::with_capacity(atoms.len());
    for (atom, col) in atoms.iter().zip(&state.columns) {
        let a = atom.amplitude;
        let poly = &atom.support;
        let p = poly.perimeter();
        amplitude.push(dot(col, r) + lambda * p * a.signum());
        let w = op.edge_measurement_weights(poly, quad)?;
        let nu = poly.normals();
        let dp = poly.perimeter_gradient();
        let n = poly.len();
        vertices.push(
            (0..n)
                .map(|j| {
                    let (wm, wp) = (dot(&w[j].minus, r), dot(&w[j].plus, r));
                    (nu[(j + n - 1) % n] * wm + nu[j] * wp) * a + dp[j] * (lambda * a.abs())
                })
                .collect(),
        );
    }
    Ok(SlidingGradient {
        objective: state.objective,
        amplitude,
        vertices,
    })
}

/// `h_i = <Phi 1_{E_i}, r> + lambda P_i sign(a_i)` and
/// `theta_ij = a_i (<r, W-_ij> nu_{j-1} + <r, W+_ij> nu_j) + lambda |a_i| (tau_{j-1} - tau_j)`
/// with `r = Phi u - y`.
pub fn sliding_gradient(
    u: &AtomicFunction,
    op: &GaussianOperator,
    y: &Measurements,
    lambda: f64,
    quad: &QuadratureSpec,
) -> Result<SlidingGradient> {
    let state = evaluate(u.atoms(), op, y, lambda, quad)?;
    gradient_at(u.atoms(), &state, op, lambda, quad)
}

/// Preconditioned descent `a_i <- a_i - alpha kappa_i h_i`,
/// `x_ij <- x_ij - alpha theta_ij` with `kappa_i = (|a_i| / diam_i)^2`
/// (frozen at the input), so that one step moves amplitudes and vertices by
/// comparable relative amounts. Trials that break simplicity or change an
/// amplitude's sign are shrunk; Armijo backtracking on `T_lambda` ensures
/// the output objective never exceeds the input one.
pub fn sliding_step(
    u0: &AtomicFunction,
    op: &GaussianOperator,
    y: &Measurements,
    lambda: f64,
    cfg: &SlideConfig,
    quad: &QuadratureSpec,
) -> Result<SlideOutcome> {
    cfg.validate()?;
    let mut atoms = u0.atoms().to_vec();
    let mut state = evaluate(&atoms, op, y, lambda, quad)?;
    let initial_objective = state.objective;
    let kappa: Vec<f64> = atoms
        .iter()
        .map(|a| (a.amplitude.abs() / a.support.diameter()).powi(2))
        .collect();
    let dmax = atoms.iter().map(|a| a.support.diameter()).fold(0.0, f64::max);
    let mut trace = Vec::new();
    let mut stop = RefineStop::MaxIters;
    let mut iterations = 0;
    if atoms.is_empty() {
        stop = RefineStop::GradientTolerance;
    }

    // flattened scaled iterate and gradient for Barzilai-Borwein steps
    let flatten = |atoms: &[Atom], g: &SlidingGradient| -> (Vec<f64>, Vec<f64>) {
        let mut x = Vec::new();
        let mut d = Vec::new();
        for (i, a) in atoms.iter().enumerate() {
            if kappa[i] > 0.0 {
                x.push(a.amplitude / kappa[i].sqrt());
                d.push(g.amplitude[i] * kappa[i].sqrt());
            }
            for (v, t) in a.support.vertices().iter().zip(&g.vertices[i]) {
                x.extend([v.x, v.y]);
                d.extend([t.x, t.y]);
            }
        }
        (x, d)
    };
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;

    for it in 0..if atoms.is_empty() { 0 } else { cfg.max_iters } {
        let g = gradient_at(&atoms, &state, op, lambda, quad)?;
        let (xs, ds) = flatten(&atoms, &g);
        let gnorm_sq: f64 = ds.iter().map(|d| d * d).sum();
        if state.objective == 0.0 || gnorm_sq.sqrt() * dmax / state.objective < cfg.grad_tol {
            stop = RefineStop::GradientTolerance;
            break;
        }
        // cap: no vertex moves more than step_init diam_i and no amplitude
        // changes by more than step_init |a_i| on the first trial
        let mut cap = f64::INFINITY;
        for (i, a) in atoms.iter().enumerate() {
            let tmax = g.vertices[i].iter().fold(0.0f64, |m, t| m.max(t.norm()));
            if tmax > 0.0 {
                cap = cap.min(cfg.step_init * a.support.diameter() / tmax);
            }
            let da = kappa[i] * g.amplitude[i].abs();
            if da > 0.0 {
                cap = cap.min(cfg.step_init * a.amplitude.abs() / da);
            }
        }
        let mut alpha = match &prev {
            Some((x0, d0)) => {
                let (mut ss, mut sy) = (0.0, 0.0);
                for k in 0..xs.len() {
                    let s = xs[k] - x0[k];
                    ss += s * s;
                    sy += s * (ds[k] - d0[k]);
                }
                if sy > 0.0 && ss > 0.0 {
                    (ss / sy).min(cap)
                } else {
                    cap
                }
            }
            None => cap,
        };
        let alpha_floor = cfg.min_step * cap;
        let mut accepted = None;
        while alpha >= alpha_floor {
            match trial(&atoms, &g, &kappa, alpha) {
                Some(cand) => {
                    let s = evaluate(&cand, op, y, lambda, quad)?;
                    if s.objective <= state.objective - cfg.armijo_c * alpha * gnorm_sq {
                        accepted = Some((cand, s));
                        break;
                    }
                }
                None => {}
            }
            alpha *= cfg.step_shrink;
        }
        let Some((cand, s)) = accepted else {
            stop = RefineStop::MinStep;
            break;
        };
        prev = Some((xs, ds));
        atoms = cand;
        state = s;
        iterations = it + 1;
        trace.push(RefineRecord {
            iter: iterations,
            objective: state.objective,
            step: alpha,
            grad_norm: gnorm_sq.sqrt(),
        });
    }
    debug!(
        "slide: T {initial_objective:.6e} -> {:.6e} in {iterations} iterations ({stop:?})",
        state.objective
    );
    Ok(SlideOutcome {
        u: AtomicFunction::new(atoms),
        objective: state.objective,
        initial_objective,
        iterations,
        stop,
        trace,
    })
}

fn trial(atoms: &[Atom], g: &SlidingGradient, kappa: &[f64], alpha: f64) -> Option<Vec<Atom>> {
    atoms
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let amp = a.amplitude - alpha * kappa[i] * g.amplitude[i];
            if amp == 0.0 || amp.signum() != a.amplitude.signum() {
                return None;
            }
            let moved: Vec<Point2> = a
                .support
                .vertices()
                .iter()
                .zip(&g.vertices[i])
                .map(|(&x, &t)| x - t * alpha)
                .collect();
            SimplePolygon::new_ccw(moved).ok().map(|p| Atom::new(amp, p))
        })
        .collect()
}

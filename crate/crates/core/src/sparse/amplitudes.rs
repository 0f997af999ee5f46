//! Amplitude step: the weighted LASSO
//! `min_a 1/2 |sum_i a_i c_i - y|^2 + sum_i w_i |a_i|` with `c_i = Phi 1_{E_i}`
//! and `w_i = lambda P(E_i)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{QuadratureSpec, SimplePolygon};
use crate::operator::{GaussianOperator, Measurements};

/// The LASSO in Gram form; every quantity lives in `R^N` with `N` the number
/// of atoms.
#[derive(Debug, Clone)]
pub struct LassoProblem {
    gram: DMatrix<f64>,
    corr: DVector<f64>,
    weights: Vec<f64>,
    y_norm_sq: f64,
}

impl LassoProblem {
    pub fn new(columns: &[Vec<f64>], y: &Measurements, weights: Vec<f64>) -> Result<Self> {
        if columns.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: columns.len(),
                got: weights.len(),
            });
        }
        if let Some(c) = columns.iter().find(|c| c.len() != y.len()) {
            return Err(Error::DimensionMismatch {
                expected: y.len(),
                got: c.len(),
            });
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidConfig("LASSO weights must be positive".into()));
        }
        let n = columns.len();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let gram = DMatrix::from_fn(n, n, |i, j| dot(&columns[i], &columns[j]));
        let corr = DVector::from_fn(n, |i, _| dot(&columns[i], &y.values));
        Ok(LassoProblem {
            gram,
            corr,
            weights,
            y_norm_sq: y.norm().powi(2),
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn objective(&self, a: &DVector<f64>) -> f64 {
        let quad = 0.5 * a.dot(&(&self.gram * a)) - self.corr.dot(a) + 0.5 * self.y_norm_sq;
        let l1: f64 = a.iter().zip(&self.weights).map(|(x, w)| w * x.abs()).sum();
        // the quadratic part is a squared norm; clamp rounding below zero
        quad.max(0.0) + l1
    }

    /// `<c_i, sum_k a_k c_k - y>` for every atom.
    pub fn correlations(&self, a: &DVector<f64>) -> DVector<f64> {
        &self.gram * a - &self.corr
    }

    /// Largest optimality violation relative to the atom weight:
    /// `|g_i + w_i sign(a_i)| / w_i` on the support, `(|g_i| - w_i)^+ / w_i`
    /// off it.
    pub fn kkt_violation(&self, a: &DVector<f64>) -> f64 {
        let g = self.correlations(a);
        (0..self.len())
            .map(|i| {
                let w = self.weights[i];
                if a[i] != 0.0 {
                    (g[i] + w * a[i].signum()).abs() / w
                } else {
                    (g[i].abs() - w).max(0.0) / w
                }
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSolution {
    pub amplitudes: Vec<f64>,
    pub objective: f64,
    pub kkt_violation: f64,
    pub iterations: usize,
    /// False when the iteration budget ran out above `tol`.
    pub converged: bool,
}

const MAX_ITERS: usize = 20_000;

fn soft(x: f64, t: f64) -> f64 {
    x.signum() * (x.abs() - t).max(0.0)
}

/// Exact solve on the support of `a` with its signs fixed; accepted only
/// if it keeps the signs, satisfies the optimality conditions better and
/// does not increase the objective.
fn polish(p: &LassoProblem, a: &DVector<f64>) -> Option<DVector<f64>> {
    let support: Vec<usize> = (0..p.len()).filter(|&i| a[i] != 0.0).collect();
    if support.is_empty() {
        return None;
    }
    let k = support.len();
    let g = DMatrix::from_fn(k, k, |r, c| p.gram[(support[r], support[c])]);
    let rhs = DVector::from_fn(k, |r, _| {
        let i = support[r];
        p.corr[i] - p.weights[i] * a[i].signum()
    });
    let sol = g.lu().solve(&rhs)?;
    let mut out = DVector::zeros(p.len());
    for (r, &i) in support.iter().enumerate() {
        if !sol[r].is_finite() || sol[r].signum() != a[i].signum() || sol[r] == 0.0 {
            return None;
        }
        out[i] = sol[r];
    }
    let better = p.kkt_violation(&out) <= p.kkt_violation(a) && p.objective(&out) <= p.objective(a) * (1.0 + 1e-14);
    better.then_some(out)
}

/// Accelerated proximal gradient with backtracking and adaptive restart,
/// followed by an exact solve on the detected support. `tol` bounds the
/// relative optimality violation (see [`LassoProblem::kkt_violation`]).
pub fn solve_lasso(p: &LassoProblem, tol: f64, warm: Option<&[f64]>) -> AmplitudeSolution {
    let n = p.len();
    if n == 0 {
        return AmplitudeSolution {
            amplitudes: vec![],
            objective: 0.5 * p.y_norm_sq,
            kkt_violation: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let mut x = match warm {
        Some(w) if w.len() == n => DVector::from_column_slice(w),
        _ => DVector::zeros(n),
    };
    let smooth = |a: &DVector<f64>| 0.5 * a.dot(&(&p.gram * a)) - p.corr.dot(a);
    let mut lip = (0..n).map(|i| p.gram[(i, i)]).fold(f64::MIN_POSITIVE, f64::max);
    let mut z = x.clone();
    let mut t: f64 = 1.0;
    let mut f_prev = p.objective(&x);
    let mut iterations = 0;
    let mut converged = false;

    for it in 1..=MAX_ITERS {
        iterations = it;
        let grad = p.correlations(&z);
        let fz = smooth(&z);
        let next = loop {
            let cand = DVector::from_fn(n, |i, _| soft(z[i] - grad[i] / lip, p.weights[i] / lip));
            let d = &cand - &z;
            if smooth(&cand) <= fz + grad.dot(&d) + 0.5 * lip * d.norm_squared() * (1.0 + 1e-12) + 1e-300 {
                break cand;
            }
            lip *= 2.0;
        };
        let f_next = p.objective(&next);
        if f_next > f_prev {
            // restart the momentum from the current point
            z = x.clone();
            t = 1.0;
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = &next + (&next - &x) * ((t - 1.0) / t_next);
        x = next;
        t = t_next;
        f_prev = f_next;
        if it % 10 == 0 || it < 10 {
            if let Some(pol) = polish(p, &x) {
                if p.kkt_violation(&pol) <= tol {
                    x = pol;
                    converged = true;
                    break;
                }
            }
            if p.kkt_violation(&x) <= tol {
                converged = true;
                break;
            }
        }
    }
    if let Some(pol) = polish(p, &x) {
        x = pol;
    }
    let kkt = p.kkt_violation(&x);
    AmplitudeSolution {
        amplitudes: x.iter().copied().collect(),
        objective: p.objective(&x),
        kkt_violation: kkt,
        iterations,
        converged: converged || kkt <= tol,
    }
}

/// LASSO over fixed supports with columns computed by quadrature.
pub fn solve_amplitudes(
    supports: &[SimplePolygon],
    op: &GaussianOperator,
    y: &Measurements,
    lambda: f64,
    quad: &QuadratureSpec,
    tol: f64,
) -> Result<AmplitudeSolution> {
    let columns = supports
        .iter()
        .map(|s| op.sensing_integrals(s, quad))
        .collect::<Result<Vec<_>>>()?;
    let weights = supports.iter().map(|s| lambda * s.perimeter()).collect();
    let problem = LassoProblem::new(&columns, y, weights)?;
    Ok(solve_lasso(&problem, tol, None))
}

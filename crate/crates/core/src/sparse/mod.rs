//! Sparse reconstruction engine: atoms, objective, amplitude LASSO, sliding
//! step and the Frank-Wolfe outer loop.

mod amplitudes;
mod frank_wolfe;
mod sliding;

pub use amplitudes::{solve_amplitudes, solve_lasso, AmplitudeSolution, LassoProblem};
pub use frank_wolfe::{
    atom_ratios, cheeger_oracle, frank_wolfe, CheegerOracleConfig, FWConfig, FWOutcome, FWRecord, FWTrace,
    OracleResult, StopReason,
};
pub use sliding::{sliding_gradient, sliding_step, SlideConfig, SlideOutcome, SlidingGradient};

use crate::error::Result;
use crate::geometry::{segment_distance, QuadratureSpec, SimplePolygon};
use crate::operator::{GaussianOperator, Measurements};

/// One weighted indicator `a 1_E`.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub amplitude: f64,
    pub support: SimplePolygon,
}

impl Atom {
    pub fn new(amplitude: f64, support: SimplePolygon) -> Self {
        Atom { amplitude, support }
    }
}

/// `u = sum_i a_i 1_{E_i}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AtomicFunction {
    atoms: Vec<Atom>,
}

impl AtomicFunction {
    pub fn new(atoms: Vec<Atom>) -> Self {
        AtomicFunction { atoms }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atoms_mut(&mut self) -> &mut Vec<Atom> {
        &mut self.atoms
    }

    pub fn into_atoms(self) -> Vec<Atom> {
        self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Total variation assuming the atom boundaries do not overlap:
    /// `sum_i |a_i| P(E_i)`.
    pub fn total_variation(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.amplitude.abs() * a.support.perimeter())
            .sum()
    }

    /// Pointwise value, summing amplitudes of the atoms whose support
    /// contains `p` (boundary points count as outside).
    pub fn value_at(&self, p: crate::geometry::Point2) -> f64 {
        self.atoms
            .iter()
            .filter(|a| matches!(crate::geometry::winding_number(a.support.vertices(), p), Ok(w) if w != 0))
            .map(|a| a.amplitude)
            .sum()
    }

    /// Pairs of atoms whose boundaries come within `rel_tol * diam` of each
    /// other, where `diam` is the smaller of the two diameters. Such pairs may
    /// break additivity of the total variation.
    pub fn near_boundary_contacts(&self, rel_tol: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.atoms.len() {
            for j in (i + 1)..self.atoms.len() {
                let (a, b) = (&self.atoms[i].support, &self.atoms[j].support);
                let tol = rel_tol * a.diameter().min(b.diameter());
                let close = a
                    .edges()
                    .any(|(p, q)| b.edges().any(|(r, s)| segment_distance(p, q, r, s) <= tol));
                if close {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// `T_lambda(u) = 1/2 |Phi u - y|^2 + lambda sum_i |a_i| P(E_i)`.
pub fn objective(
    u: &AtomicFunction,
    op: &GaussianOperator,
    y: &Measurements,
    lambda: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let r = op.forward(u, quad)?.sub(y);
    Ok(0.5 * r.norm().powi(2) + lambda * u.total_variation())
}

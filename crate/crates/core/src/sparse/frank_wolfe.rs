//! Fully corrective Frank-Wolfe loop with a Cheeger oracle and sliding.

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};

use super::amplitudes::{solve_lasso, LassoProblem};
use super::sliding::{sliding_step, SlideConfig};
use super::{Atom, AtomicFunction};
use crate::cheeger::{cheeger_objective, refine, RefineConfig};
use crate::error::{Error, Result};
use crate::geometry::{QuadratureSpec, ScalarField, SimplePolygon};
use crate::grid_solver::{discretize_field, extract_polygon, solve_relaxed_cheeger, PrimalDualConfig};
use crate::operator::{GaussianOperator, Measurements};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FWConfig {
    pub lambda: f64,
    /// Stop once the best Cheeger ratio is at most `1 + stop_tol`.
    pub stop_tol: f64,
    pub max_atoms: usize,
    pub max_iters: usize,
    /// Relative optimality tolerance of the amplitude LASSO.
    pub lasso_tol: f64,
    pub slide: SlideConfig,
    /// Atoms with `|a| < prune_tol` are dropped; `None` uses
    /// `1e-10 |y| / max_i P(E_i)`.
    pub prune_tol: Option<f64>,
}

impl FWConfig {
    pub fn new(lambda: f64) -> Self {
        FWConfig {
            lambda,
            stop_tol: 1e-3,
            max_atoms: 20,
            max_iters: 20,
            lasso_tol: 1e-8,
            slide: SlideConfig::default(),
            prune_tol: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.stop_tol > 0.0 && self.lasso_tol > 0.0) {
            return Err(Error::InvalidConfig("stop_tol and lasso_tol must be positive".into()));
        }
        if self.prune_tol.is_some_and(|p| !(p >= 0.0)) {
            return Err(Error::InvalidConfig("prune_tol must be nonnegative".into()));
        }
        if self.max_atoms == 0 {
            return Err(Error::InvalidConfig("max_atoms must be positive".into()));
        }
        self.slide.validate()
    }
}

/// Mesh stage of the Cheeger oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheegerOracleConfig {
    /// Cells per side.
    pub grid_n: usize,
    /// Vertices of each new atom.
    pub n_vertices: usize,
    /// The mesh covers `[-R, R]^2` holding this fraction of the L2 mass of
    /// the dual field.
    pub mass_fraction: f64,
    pub primal_dual: PrimalDualConfig,
}

impl Default for CheegerOracleConfig {
    fn default() -> Self {
        CheegerOracleConfig {
            grid_n: 64,
            n_vertices: 32,
            mass_fraction: 0.9999,
            primal_dual: PrimalDualConfig::default(),
        }
    }
}

impl CheegerOracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_n < 2 || self.n_vertices < 3 {
            return Err(Error::InvalidConfig("grid_n must be >= 2 and n_vertices >= 3".into()));
        }
        if !(self.mass_fraction > 0.0 && self.mass_fraction < 1.0) {
            return Err(Error::InvalidConfig("mass_fraction must be in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Result of one oracle call.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub polygon: SimplePolygon,
    /// `sign(int_E eta)`, the sign of the atom to insert.
    pub sign: f64,
    /// `|int_E eta| / P(E)` after refinement.
    pub ratio: f64,
    /// Same ratio for the mesh-stage polygon.
    pub mesh_ratio: f64,
    pub half_width: f64,
    /// False when refinement failed and the mesh polygon was kept.
    pub refined: bool,
}

/// Relaxed mesh problem, level-set extraction, then polygonal ascent.
/// `Ok(None)` when the field is numerically zero.
pub fn cheeger_oracle<F: ScalarField + ?Sized>(
    eta: &F,
    half_width: f64,
    grid: &CheegerOracleConfig,
    refine_cfg: &RefineConfig,
    quad: &QuadratureSpec,
) -> Result<Option<OracleResult>> {
    grid.validate()?;
    let eta_bar = discretize_field(eta, half_width, grid.grid_n, quad)?;
    let relaxed = solve_relaxed_cheeger(&eta_bar, &grid.primal_dual)?;
    let mesh = match extract_polygon(&relaxed.u, eta, grid.n_vertices, quad) {
        Ok(m) => m,
        Err(Error::NoContourFound) => return Ok(None),
        Err(e) => return Err(e),
    };
    let (polygon, ratio, refined) = match refine(&mesh.polygon, eta, refine_cfg, quad) {
        Ok(out) if out.objective >= mesh.ratio => (out.polygon, out.objective, true),
        Ok(_) => (mesh.polygon.clone(), mesh.ratio, true),
        Err(e) => {
            warn!("polygon refinement failed ({e}); keeping the mesh-stage polygon");
            (mesh.polygon.clone(), mesh.ratio, false)
        }
    };
    let area = polygon.weighted_area(eta, quad)?;
    Ok(Some(OracleResult {
        polygon,
        sign: if area >= 0.0 { 1.0 } else { -1.0 },
        ratio,
        mesh_ratio: mesh.ratio,
        half_width,
        refined,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Best Cheeger ratio at most `1 + stop_tol`.
    Certificate,
    MaxIters,
    MaxAtoms,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::Certificate => "certificate",
            StopReason::MaxIters => "max_iters",
            StopReason::MaxAtoms => "max_atoms",
        }
    }
}

/// State after outer iteration `k` (after the second LASSO).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FWRecord {
    pub k: usize,
    pub objective: f64,
    pub tv: f64,
    pub residual_norm: f64,
    /// Refined Cheeger ratio of the atom inserted at this iteration.
    pub cheeger_ratio: f64,
    pub mesh_ratio: f64,
    pub n_atoms: usize,
    /// Objective decrease achieved by the sliding step.
    pub slide_improvement: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FWTrace {
    pub records: Vec<FWRecord>,
}

#[derive(Debug, Clone)]
pub struct FWOutcome {
    pub u: AtomicFunction,
    pub trace: FWTrace,
    pub stop: StopReason,
    pub iterations: usize,
    pub final_objective: f64,
    /// Ratio returned by the last oracle call; 0 when the dual field vanished.
    pub final_cheeger_ratio: f64,
}

fn lasso(
    supports: &[SimplePolygon],
    warm: &[f64],
    op: &GaussianOperator,
    y: &Measurements,
    cfg: &FWConfig,
    quad: &QuadratureSpec,
) -> Result<Vec<f64>> {
    let columns = supports
        .iter()
        .map(|s| op.sensing_integrals(s, quad))
        .collect::<Result<Vec<_>>>()?;
    let weights = supports.iter().map(|s| cfg.lambda * s.perimeter()).collect();
    let problem = LassoProblem::new(&columns, y, weights)?;
    let sol = solve_lasso(&problem, cfg.lasso_tol, Some(warm));
    if !sol.converged {
        warn!("amplitude LASSO stopped with optimality violation {:.3e}", sol.kkt_violation);
    }
    Ok(sol.amplitudes)
}

fn prune(atoms: Vec<Atom>, tol: f64) -> Vec<Atom> {
    atoms.into_iter().filter(|a| a.amplitude.abs() >= tol && a.amplitude != 0.0).collect()
}

fn corrective_lasso(
    atoms: Vec<Atom>,
    op: &GaussianOperator,
    y: &Measurements,
    cfg: &FWConfig,
    quad: &QuadratureSpec,
    y_norm: f64,
) -> Result<Vec<Atom>> {
    let supports: Vec<SimplePolygon> = atoms.iter().map(|a| a.support.clone()).collect();
    let warm: Vec<f64> = atoms.iter().map(|a| a.amplitude).collect();
    let amps = lasso(&supports, &warm, op, y, cfg, quad)?;
    let tol = cfg.prune_tol.unwrap_or_else(|| {
        let pmax = supports.iter().map(|s| s.perimeter()).fold(0.0, f64::max);
        1e-10 * y_norm / pmax
    });
    let atoms = supports.into_iter().zip(amps).map(|(s, a)| Atom::new(a, s)).collect();
    Ok(prune(atoms, tol))
}

/// Runs the outer loop from `u = 0`. Each iteration: oracle on
/// `eta = -(Phi u - y) / lambda`, stop if its ratio is at most `1 + stop_tol`,
/// otherwise insert the new support with amplitude 0, re-fit all amplitudes,
/// prune, slide, re-fit and prune again.
pub fn frank_wolfe(
    op: &GaussianOperator,
    y: &Measurements,
    cfg: &FWConfig,
    grid_cfg: &CheegerOracleConfig,
    refine_cfg: &RefineConfig,
    quad: &QuadratureSpec,
) -> Result<FWOutcome> {
    cfg.validate()?;
    grid_cfg.validate()?;
    refine_cfg.validate()?;
    if y.len() != op.len() {
        return Err(Error::DimensionMismatch {
            expected: op.len(),
            got: y.len(),
        });
    }
    let y_norm = y.norm();
    let mut u = AtomicFunction::default();
    let mut trace = FWTrace::default();
    let mut objective = 0.5 * y_norm * y_norm;
    let mut final_ratio;

    let stop = loop {
        let k = trace.records.len();
        let residual = op.forward(&u, quad)?.sub(y);
        let eta = op.dual_field(residual.values.iter().map(|r| -r / cfg.lambda).collect())?;
        let oracle = if eta.is_zero() {
            None
        } else {
            let r = eta.mass_radius(grid_cfg.mass_fraction)?;
            cheeger_oracle(&eta, r, grid_cfg, refine_cfg, quad)?
        };
        let Some(oracle) = oracle else {
            final_ratio = 0.0;
            info!("iteration {k}: dual field vanishes");
            break StopReason::Certificate;
        };
        final_ratio = oracle.ratio;
        info!(
            "iteration {k}: Cheeger ratio {:.6} (mesh {:.6}), R = {:.4}",
            oracle.ratio, oracle.mesh_ratio, oracle.half_width
        );
        if oracle.ratio <= 1.0 + cfg.stop_tol {
            break StopReason::Certificate;
        }
        if k >= cfg.max_iters {
            break StopReason::MaxIters;
        }
        if u.len() >= cfg.max_atoms {
            break StopReason::MaxAtoms;
        }

        let mut atoms = u.into_atoms();
        atoms.push(Atom::new(0.0, oracle.polygon));
        let atoms = corrective_lasso(atoms, op, y, cfg, quad, y_norm)?;
        let slid = sliding_step(&AtomicFunction::new(atoms), op, y, cfg.lambda, &cfg.slide, quad)?;
        let slide_improvement = slid.initial_objective - slid.objective;
        let atoms = corrective_lasso(slid.u.into_atoms(), op, y, cfg, quad, y_norm)?;
        u = AtomicFunction::new(atoms);
        let contacts = u.near_boundary_contacts(1e-6);
        if !contacts.is_empty() {
            warn!("atom boundaries nearly touch {contacts:?}; total variation may be overestimated");
        }

        let residual = op.forward(&u, quad)?.sub(y);
        let tv = u.total_variation();
        let next = 0.5 * residual.norm().powi(2) + cfg.lambda * tv;
        if next >= objective {
            warn!("objective did not decrease at iteration {k}: {objective:.9e} -> {next:.9e}");
        }
        objective = next;
        debug!("iteration {k}: T = {objective:.9e}, {} atoms, slide gained {slide_improvement:.3e}", u.len());
        trace.records.push(FWRecord {
            k: k + 1,
            objective,
            tv,
            residual_norm: residual.norm(),
            cheeger_ratio: oracle.ratio,
            mesh_ratio: oracle.mesh_ratio,
            n_atoms: u.len(),
            slide_improvement,
        });
    };
    Ok(FWOutcome {
        iterations: trace.records.len(),
        u,
        trace,
        stop,
        final_objective: objective,
        final_cheeger_ratio: final_ratio,
    })
}

/// Cheeger ratio `|int_E eta| / P(E)` of every atom in `u` for the dual field
/// of `u` itself; at a LASSO optimum each equals 1 up to `lasso_tol`.
pub fn atom_ratios(
    u: &AtomicFunction,
    op: &GaussianOperator,
    y: &Measurements,
    lambda: f64,
    quad: &QuadratureSpec,
) -> Result<Vec<f64>> {
    let residual = op.forward(u, quad)?.sub(y);
    let eta = op.dual_field(residual.values.iter().map(|r| -r / lambda).collect())?;
    u.atoms()
        .iter()
        .map(|a| cheeger_objective(&a.support, &eta, quad))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;

    #[test]
    fn zero_data_stops_immediately() {
        let op = GaussianOperator::grid(1.0, 4, 0.3).unwrap();
        let y = Measurements::zeros(op.len());
        let out = frank_wolfe(
            &op,
            &y,
            &FWConfig::new(0.1),
            &CheegerOracleConfig::default(),
            &RefineConfig::default(),
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.u.is_empty());
        assert_eq!(out.stop, StopReason::Certificate);
    }

    #[test]
    fn single_disk_is_recovered() {
        let op = GaussianOperator::grid(1.0, 6, 0.3).unwrap();
        let quad = QuadratureSpec::default();
        let truth = AtomicFunction::new(vec![Atom::new(
            1.0,
            SimplePolygon::regular(32, Point2::new(0.1, -0.1), 0.4, 0.0).unwrap(),
        )]);
        let y = op.forward(&truth, &quad).unwrap();
        let cfg = FWConfig::new(1e-3);
        let grid = CheegerOracleConfig { grid_n: 32, n_vertices: 16, ..Default::default() };
        let out = frank_wolfe(&op, &y, &cfg, &grid, &RefineConfig::default(), &quad).unwrap();
        assert_eq!(out.stop, StopReason::Certificate);
        assert!(!out.u.is_empty());
        for w in out.trace.records.windows(2) {
            assert!(w[1].objective < w[0].objective);
        }
        for r in atom_ratios(&out.u, &op, &y, cfg.lambda, &quad).unwrap() {
            assert!((r - 1.0).abs() < 1e-6, "{r}");
        }
        let main = out
            .u
            .atoms()
            .iter()
            .max_by(|a, b| a.amplitude.abs().total_cmp(&b.amplitude.abs()))
            .unwrap();
        assert!(main.support.centroid().dist(Point2::new(0.1, -0.1)) < 0.05);
    }
}

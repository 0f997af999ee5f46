//! Run configuration, read from TOML. Every section except `[operator]` is
//! optional and falls back to the library defaults; unknown keys are errors.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use offgrid_tv::cheeger::RefineConfig;
use offgrid_tv::geometry::QuadratureSpec;
use offgrid_tv::grid_solver::PrimalDualConfig;
use offgrid_tv::operator::{calibrated_lambda, GaussianOperator};
use offgrid_tv::phantom::PhantomAtom;
use offgrid_tv::sparse::{CheegerOracleConfig, FWConfig, SlideConfig};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Output directory, relative to the config file; `--out` overrides it.
    pub out_dir: Option<PathBuf>,
    /// Cells per side of the reconstruction raster.
    #[serde(default = "default_raster_n")]
    pub raster_n: usize,
    pub operator: Option<OperatorSpec>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub phantom: Vec<PhantomAtom>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub oracle: CheegerOracleConfig,
    #[serde(default)]
    pub refine: RefineConfig,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub baseline: BaselineSpec,
    pub cheeger: Option<CheegerSpec>,
    pub radial: Option<RadialSpec>,
}

fn default_raster_n() -> usize {
    256
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    /// Sensor centers form a regular grid on `[-half_width, half_width]^2`.
    pub half_width: f64,
    pub per_side: usize,
    pub sigma: f64,
}

impl OperatorSpec {
    pub fn build(&self) -> Result<GaussianOperator, CliError> {
        Ok(GaussianOperator::grid(self.half_width, self.per_side, self.sigma)?)
    }
}

/// Either `tau` or `snr_db` (never both); no noise when both are absent.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub tau: Option<f64>,
    pub snr_db: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    /// Explicit regularization weight.
    pub lambda: Option<f64>,
    /// `lambda = c sqrt(2 log(m) tau^2)`, used when `lambda` is absent.
    pub lambda_c: Option<f64>,
    pub stop_tol: f64,
    pub max_atoms: usize,
    pub max_iters: usize,
    pub lasso_tol: f64,
    pub prune_tol: Option<f64>,
    pub slide: SlideConfig,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let fw = FWConfig::new(1.0);
        SolverSpec {
            lambda: None,
            lambda_c: None,
            stop_tol: fw.stop_tol,
            max_atoms: fw.max_atoms,
            max_iters: fw.max_iters,
            lasso_tol: fw.lasso_tol,
            prune_tol: fw.prune_tol,
            slide: fw.slide,
        }
    }
}

impl SolverSpec {
    pub fn lambda(&self, m: usize, tau: f64) -> Result<f64, CliError> {
        let lambda = match (self.lambda, self.lambda_c) {
            (Some(l), None) => l,
            (None, Some(c)) if tau > 0.0 => calibrated_lambda(c, m, tau),
            (None, Some(_)) => return Err(CliError::config("solver.lambda_c needs a positive noise level")),
            (Some(_), Some(_)) => return Err(CliError::config("give solver.lambda or solver.lambda_c, not both")),
            (None, None) => return Err(CliError::config("missing solver.lambda or solver.lambda_c")),
        };
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(CliError::config(format!("lambda must be positive, got {lambda}")));
        }
        Ok(lambda)
    }

    pub fn fw_config(&self, lambda: f64) -> FWConfig {
        FWConfig {
            lambda,
            stop_tol: self.stop_tol,
            max_atoms: self.max_atoms,
            max_iters: self.max_iters,
            lasso_tol: self.lasso_tol,
            slide: self.slide,
            prune_tol: self.prune_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSpec {
    /// Cells per side.
    pub n: usize,
    /// Defaults to the operator's half width.
    pub half_width: Option<f64>,
    pub primal_dual: PrimalDualConfig,
}

impl Default for BaselineSpec {
    fn default() -> Self {
        BaselineSpec {
            n: 64,
            half_width: None,
            primal_dual: PrimalDualConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheegerSpec {
    pub field: FieldSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    /// `exp(-|x - center|^2 / (2 sigma^2))`.
    Gaussian {
        #[serde(default)]
        center: [f64; 2],
        sigma: f64,
    },
    /// `sum_j c_j phi_j` over the sensors of `[operator]`.
    Coefficients { values: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialSpec {
    pub profile: ProfileSpec,
    #[serde(default = "default_ns")]
    pub ns: Vec<usize>,
    /// Runs the full solver on one centered measurement when present.
    pub pipeline: Option<PipelineSpec>,
}

fn default_ns() -> Vec<usize> {
    vec![3, 4, 5, 6, 8, 16, 32, 64]
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    /// `exp(-r^2 / (2 sigma^2))`.
    Gaussian { sigma: f64 },
    /// `(1 + (r / scale)^2)^(-power)`.
    Rational { scale: f64, power: f64 },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSpec {
    pub y: f64,
    pub lambda: f64,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.raster_n < 2 {
            return Err(CliError::config("raster_n must be at least 2"));
        }
        if self.noise.tau.is_some() && self.noise.snr_db.is_some() {
            return Err(CliError::config("give noise.tau or noise.snr_db, not both"));
        }
        if let Some(tau) = self.noise.tau {
            if !(tau >= 0.0 && tau.is_finite()) {
                return Err(CliError::config(format!("noise.tau must be nonnegative, got {tau}")));
            }
        }
        Ok(self.refine.validate().and(self.oracle.validate()).and(self.quadrature.validate())?)
    }

    pub fn operator(&self) -> Result<GaussianOperator, CliError> {
        self.operator
            .ok_or_else(|| CliError::config("missing [operator] section"))?
            .build()
    }

    /// Seed from the command line, else from the config.
    pub fn seed(&self, cli: Option<u64>) -> Option<u64> {
        cli.or(self.noise.seed)
    }
}

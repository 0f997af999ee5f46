//! `offgrid-tv`: batch runs of the off-the-grid TV solver.
//!
//! Exit codes: 0 ok, 1 output error, 2 configuration error, 3 degenerate
//! solver input (e.g. a vanishing field), 4 violated radial-profile
//! assumption.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "offgrid-tv", version, about = "Grid-free total variation regularization with polygonal atoms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (default: `out_dir` from the config, else `out`
    /// next to the config file).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Noise seed, overriding the config.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    /// Only report errors.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Phantom -> noisy measurements -> Frank-Wolfe reconstruction.
    Solve,
    /// Mesh stage and polygon refinement for one weight field.
    Cheeger,
    /// Fixed-grid isotropic TV reconstruction of the same measurements.
    Baseline,
    /// Radial ground truth table, optionally with a full single-measurement run.
    Radial,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] offgrid_tv::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    fn exit_code(&self) -> u8 {
        use offgrid_tv::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                E::InvalidConfig(_) | E::InvalidQuadrature(_) | E::DimensionMismatch { .. } => 2,
                E::AssumptionViolated(_) => 4,
                E::Io(_) => 1,
                _ => 3,
            },
        }
    }
}

pub struct Context {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
}

fn out_dir(cli: &Cli, cfg: &RunConfig, config_path: &Path) -> PathBuf {
    if let Some(out) = &cli.out {
        return out.clone();
    }
    let base = config_path.parent().unwrap_or(Path::new("."));
    base.join(cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out")))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let path = cli.config.as_deref().ok_or_else(|| CliError::config("--config PATH is required"))?;
    let cfg = RunConfig::load(path)?;
    let ctx = Context {
        out_dir: out_dir(cli, &cfg, path),
        seed: cfg.seed(cli.seed),
    };
    std::fs::create_dir_all(&ctx.out_dir).map_err(offgrid_tv::Error::from)?;
    match cli.command {
        Command::Solve => commands::solve(&cfg, &ctx),
        Command::Cheeger => commands::cheeger(&cfg, &ctx),
        Command::Baseline => commands::baseline(&cfg, &ctx),
        Command::Radial => commands::radial(&cfg, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if cli.quiet {
        log::set_max_level(log::LevelFilter::Error);
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("offgrid-tv: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

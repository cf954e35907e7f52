//! Library side of the `geomedian` binary: configuration resolution, dataset
//! and artifact I/O, and the command implementations. Kept as a lib target so
//! integration tests can drive the same code paths the binary uses.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod errors;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{load_file_config, FileConfig, Resolved};
use errors::CliResult;

/// Environment variable capping the number of parallel sweep trials.
pub const THREADS_ENV: &str = "PRODUCT_MEDIAN_THREADS";

#[derive(Debug, Parser)]
#[command(name = "geomedian", version, about)]
pub struct Cli {
    /// JSON config file; flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Input dataset (JSON Lines).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Comma-separated contamination rates in [0, 0.49].
    #[arg(long, global = true)]
    pub alphas: Option<String>,
    /// Sample size.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Dimension for the multivariate scenario.
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// AR(1) decay parameter in (0, 1).
    #[arg(long, global = true)]
    pub rho: Option<f64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Solver: subgradient | weiszfeld | hybrid.
    #[arg(long, global = true)]
    pub method: Option<String>,
    #[arg(long = "max-iters", global = true)]
    pub max_iters: Option<usize>,
    /// Solver residual tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Emit an SVG chart for sweep commands (true | false).
    #[arg(long, global = true)]
    pub svg: Option<bool>,
    /// Contaminant weight for the breakdown probe.
    #[arg(long, global = true)]
    pub wi: Option<f64>,
    /// Comma-separated contaminant distances for the breakdown probe.
    #[arg(long = "r-grid", global = true)]
    pub r_grid: Option<String>,
    /// Comma-separated perturbation sizes for the perturbation probe.
    #[arg(long, global = true)]
    pub epsilons: Option<String>,
    /// Re-solves per perturbation size.
    #[arg(long = "probe-trials", global = true)]
    pub probe_trials: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Geometric median of a dataset.
    Median,
    /// Product Fréchet mean of a dataset.
    Mean,
    /// Contamination sweep on univariate Gaussian parameters.
    SweepUnivariate,
    /// Contamination sweep on multivariate Gaussian parameters.
    SweepMultivariate,
    /// Breakdown probe: contaminant weight vs escape distance.
    Breakdown,
    /// Perturbation-stability probe.
    Perturbation,
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let file_cfg = match &cli.config {
        Some(path) => load_file_config(path)?,
        None => FileConfig::default(),
    };
    let resolved = Resolved::merge(cli, file_cfg)?;
    match cli.command {
        Command::Median => commands::cmd_median(&resolved),
        Command::Mean => commands::cmd_mean(&resolved),
        Command::SweepUnivariate => commands::cmd_sweep(&resolved, false),
        Command::SweepMultivariate => commands::cmd_sweep(&resolved, true),
        Command::Breakdown => commands::cmd_breakdown(&resolved),
        Command::Perturbation => commands::cmd_perturbation(&resolved),
    }
}

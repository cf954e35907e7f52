//! Configuration resolution: an optional JSON config file provides defaults,
//! command-line flags override it, and per-command defaults fill the rest.

use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::errors::{CliError, CliResult};

/// Config-file schema. Every key mirrors one CLI flag.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub alphas: Option<Vec<f64>>,
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub rho: Option<f64>,
    pub trials: Option<usize>,
    pub method: Option<String>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub svg: Option<bool>,
    pub wi: Option<f64>,
    pub r_grid: Option<Vec<f64>>,
    pub epsilons: Option<Vec<f64>>,
    pub probe_trials: Option<usize>,
}

pub fn load_file_config(path: &PathBuf) -> CliResult<FileConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("bad config file {}: {e}", path.display())))
}

/// Fully resolved run configuration (serialized into the run manifest).
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub alphas: Vec<f64>,
    pub n: Option<usize>,
    pub d: usize,
    pub rho: f64,
    pub trials: Option<usize>,
    pub method: String,
    pub max_iters: usize,
    pub tol: f64,
    pub svg: bool,
    pub wi: f64,
    pub r_grid: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub probe_trials: usize,
}

pub fn parse_f64_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|e| CliError::config(format!("bad {what} entry '{tok}': {e}")))
        })
        .collect()
}

fn default_alphas() -> Vec<f64> {
    (0..=9).map(|i| i as f64 * 0.05).collect()
}

impl Resolved {
    /// Overlay precedence: CLI flag, then config file, then the default.
    #[allow(clippy::too_many_arguments)]
    pub fn merge(cli: &crate::Cli, file: FileConfig) -> CliResult<Resolved> {
        let alphas = match &cli.alphas {
            Some(s) => parse_f64_list(s, "--alphas")?,
            None => file.alphas.unwrap_or_else(default_alphas),
        };
        let r_grid = match &cli.r_grid {
            Some(s) => parse_f64_list(s, "--r-grid")?,
            None => file
                .r_grid
                .unwrap_or_else(|| vec![1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6]),
        };
        let epsilons = match &cli.epsilons {
            Some(s) => parse_f64_list(s, "--epsilons")?,
            None => file
                .epsilons
                .unwrap_or_else(|| vec![1e-6, 1e-5, 1e-4, 1e-3, 1e-2]),
        };
        let method = cli
            .method
            .clone()
            .or(file.method)
            .unwrap_or_else(|| "hybrid".to_string());
        let resolved = Resolved {
            input: cli.input.clone().or(file.input),
            out: cli.out.clone().or(file.out),
            seed: cli.seed.or(file.seed).unwrap_or(0),
            alphas,
            n: cli.n.or(file.n),
            d: cli.d.or(file.d).unwrap_or(5),
            rho: cli.rho.or(file.rho).unwrap_or(0.5),
            trials: cli.trials.or(file.trials),
            method,
            max_iters: cli.max_iters.or(file.max_iters).unwrap_or(10_000),
            tol: cli.tol.or(file.tol).unwrap_or(1e-9),
            svg: cli.svg.or(file.svg).unwrap_or(false),
            wi: cli.wi.or(file.wi).unwrap_or(0.4),
            r_grid,
            epsilons,
            probe_trials: cli.probe_trials.or(file.probe_trials).unwrap_or(20),
        };
        if resolved.max_iters == 0 {
            return Err(CliError::config("--max-iters must be positive"));
        }
        if !resolved.tol.is_finite() || resolved.tol <= 0.0 {
            return Err(CliError::config("--tol must be positive"));
        }
        Ok(resolved)
    }

    pub fn out_dir(&self) -> CliResult<&PathBuf> {
        self.out
            .as_ref()
            .ok_or_else(|| CliError::config("--out DIR is required for this command"))
    }

    pub fn solver_config(&self) -> CliResult<geomedian::SolverConfig> {
        let method: geomedian::SolverMethod = self
            .method
            .parse()
            .map_err(|e: geomedian::Error| CliError::config(e.to_string()))?;
        let cfg = geomedian::SolverConfig {
            method,
            max_iters: self.max_iters,
            tol_residual: self.tol,
            seed: self.seed,
            ..Default::default()
        };
        cfg.validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        Ok(cfg)
    }
}

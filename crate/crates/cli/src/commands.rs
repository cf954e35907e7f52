//! Command implementations: each writes its artifacts plus a run manifest
//! into the output directory and stays byte-deterministic for a fixed seed.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use geomedian::lab::{
    self, breakdown_probe, fit_loglog_slope, perturbation_probe, run_sweep, ContaminationSpec,
    EstimatorKind, SampleKind, Scenario,
};
use geomedian::product::{ProductManifold, WeightedSample};
use geomedian::{product_mean, solve};

use crate::config::Resolved;
use crate::dataset::{read_dataset, write_point};
use crate::errors::{CliError, CliResult};
use crate::output::{
    svg_line_chart, write_breakdown_csv, write_manifest, write_perturbation_csv, write_svg,
    write_sweep_csv, Manifest, Series,
};

fn ensure_out(cfg: &Resolved) -> CliResult<&Path> {
    let dir = cfg.out_dir()?;
    fs::create_dir_all(dir)
        .map_err(|e| CliError::internal(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir.as_path())
}

fn manifest_path(dir: &Path) -> std::path::PathBuf {
    dir.join("run_manifest.json")
}

fn internal(e: geomedian::Error) -> CliError {
    CliError::internal(e.to_string())
}

pub fn cmd_median(cfg: &Resolved) -> CliResult<()> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| CliError::config("--input PATH is required for `median`"))?;
    let dir = ensure_out(cfg)?;
    let (pm, sample) = read_dataset(input)?;
    let solver_cfg = cfg.solver_config()?;
    let report = solve(&pm, &sample, None, &solver_cfg).map_err(internal)?;
    write_point(&dir.join("median.json"), &report.minimizer)?;
    write_manifest(
        &manifest_path(dir),
        &Manifest {
            command: "median",
            version: env!("CARGO_PKG_VERSION"),
            seed: cfg.seed,
            config: cfg,
            result: json!({
                "termination": report.termination.as_str(),
                "iterations": report.iterations_used,
                "objective": report.best_objective,
            }),
        },
    )
}

pub fn cmd_mean(cfg: &Resolved) -> CliResult<()> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| CliError::config("--input PATH is required for `mean`"))?;
    let dir = ensure_out(cfg)?;
    let (pm, sample) = read_dataset(input)?;
    let mean = product_mean(&pm, &sample).map_err(internal)?;
    write_point(&dir.join("mean.json"), &mean)?;
    write_manifest(
        &manifest_path(dir),
        &Manifest {
            command: "mean",
            version: env!("CARGO_PKG_VERSION"),
            seed: cfg.seed,
            config: cfg,
            result: json!({}),
        },
    )
}

pub fn cmd_sweep(cfg: &Resolved, multivariate: bool) -> CliResult<()> {
    let dir = ensure_out(cfg)?;
    let (scenario, n, trials, command) = if multivariate {
        (
            Scenario::Multivariate { d: cfg.d, rho: cfg.rho },
            cfg.n.unwrap_or(200),
            cfg.trials.unwrap_or(3),
            "sweep-multivariate",
        )
    } else {
        (
            Scenario::Univariate,
            cfg.n.unwrap_or(1000),
            cfg.trials.unwrap_or(5),
            "sweep-univariate",
        )
    };
    let spec = ContaminationSpec {
        n,
        alpha_grid: cfg.alphas.clone(),
        trials,
        seed: cfg.seed,
        scenario,
        reference: None,
    };
    spec.validate().map_err(|e| CliError::config(e.to_string()))?;
    let solver_cfg = cfg.solver_config()?;
    let result = run_sweep(&spec, &solver_cfg).map_err(internal)?;
    write_sweep_csv(&dir.join("sweep.csv"), &result)?;

    if cfg.svg {
        let series: Vec<Series> = [
            (EstimatorKind::FrechetMean, "#d62728"),
            (EstimatorKind::GeometricMedian, "#1f77b4"),
        ]
        .iter()
        .map(|(kind, color)| Series {
            name: kind.as_str(),
            color,
            points: spec
                .alpha_grid
                .iter()
                .filter_map(|&a| result.mean_error(*kind, a).map(|e| (a, e)))
                .collect(),
        })
        .collect();
        let svg = svg_line_chart(
            &format!("Estimation error vs contamination rate ({command})"),
            "contamination rate",
            "estimation error",
            &series,
        );
        write_svg(&dir.join("sweep.svg"), &svg)?;
    }

    write_manifest(
        &manifest_path(dir),
        &Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed: cfg.seed,
            config: cfg,
            result: json!({ "rows": result.rows.len() }),
        },
    )
}

/// Clean sample for the probes: the dataset at `--input` when given,
/// otherwise `n` seeded draws from the univariate signal model.
fn probe_sample(cfg: &Resolved, default_n: usize) -> CliResult<(ProductManifold, WeightedSample)> {
    match &cfg.input {
        Some(path) => read_dataset(path),
        None => {
            let pm = lab::univariate_manifold();
            let n = cfg.n.unwrap_or(default_n);
            if n == 0 {
                return Err(CliError::config("--n must be positive"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let points = (0..n)
                .map(|_| lab::sample_univariate(SampleKind::Signal, &mut rng))
                .collect();
            let sample = WeightedSample::uniform(&pm, points)
                .map_err(|e| CliError::internal(e.to_string()))?;
            Ok((pm, sample))
        }
    }
}

pub fn cmd_breakdown(cfg: &Resolved) -> CliResult<()> {
    let dir = ensure_out(cfg)?;
    if !(cfg.wi > 0.0 && cfg.wi < 1.0) || (cfg.wi - 0.5).abs() < 1e-9 {
        return Err(CliError::config(format!(
            "--wi must lie in (0, 1) and differ from 0.5, got {}",
            cfg.wi
        )));
    }
    let (pm, clean) = probe_sample(cfg, 9)?;
    let solver_cfg = cfg.solver_config()?;
    let rows = breakdown_probe(&pm, &clean, cfg.wi, &cfg.r_grid, &solver_cfg).map_err(internal)?;
    write_breakdown_csv(&dir.join("breakdown.csv"), &rows)?;
    write_manifest(
        &manifest_path(dir),
        &Manifest {
            command: "breakdown",
            version: env!("CARGO_PKG_VERSION"),
            seed: cfg.seed,
            config: cfg,
            result: json!({ "rows": rows.len() }),
        },
    )
}

pub fn cmd_perturbation(cfg: &Resolved) -> CliResult<()> {
    let dir = ensure_out(cfg)?;
    if cfg.probe_trials == 0 {
        return Err(CliError::config("--probe-trials must be positive"));
    }
    let (pm, sample) = probe_sample(cfg, 40)?;
    let solver_cfg = cfg.solver_config()?;
    let rows = perturbation_probe(
        &pm,
        &sample,
        &cfg.epsilons,
        cfg.probe_trials,
        cfg.seed,
        &solver_cfg,
    )
    .map_err(internal)?;
    write_perturbation_csv(&dir.join("perturbation.csv"), &rows)?;
    let slope = fit_loglog_slope(&rows);
    write_manifest(
        &manifest_path(dir),
        &Manifest {
            command: "perturbation",
            version: env!("CARGO_PKG_VERSION"),
            seed: cfg.seed,
            config: cfg,
            result: json!({ "rows": rows.len(), "loglog_slope": slope }),
        },
    )
}

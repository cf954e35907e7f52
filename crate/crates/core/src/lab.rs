//! Contamination experiments: generative models for univariate and
//! multivariate Gaussian parameter clouds, estimator-error sweeps over the
//! contamination rate, a breakdown probe, and a perturbation-stability probe.
//!
//! Determinism contract: every trial derives its own RNG stream from the
//! experiment seed mixed with the (α index, trial index) pair, results are
//! assembled in fixed (α, trial, estimator) order, and trials may execute in
//! parallel without changing a single bit of the output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frechet::factor_mean;
use crate::linalg::{sqrt_spd, SpdMatrix, SymMatrix};
use crate::manifold::{FactorManifold, FactorPoint, FactorTangent};
use crate::median::{solve, SolverConfig, Termination};
use crate::product::{ProductManifold, ProductPoint, WeightedSample};

use nalgebra::DVector;

/// Maximum contamination rate accepted by sweep specs.
pub const MAX_ALPHA: f64 = 0.49;

/// SplitMix64 finalizer.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fixed 64-bit mix of the experiment seed with two stream indices; every
/// (α, trial) cell owns the stream `mix64(seed, alpha_index, trial)`.
pub fn mix64(seed: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed).wrapping_add(a)).wrapping_add(b))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Scenario {
    /// Gaussian laws N(μ, σ²) as points of ℝ × ℝ₊ in the (μ, σ) chart.
    Univariate,
    /// Gaussian laws N_d(μ, Σ) as points of ℝᵈ × SPD(d) under the
    /// Bures–Wasserstein geometry.
    Multivariate { d: usize, rho: f64 },
}

/// Parameters of a contamination sweep.
#[derive(Clone, Debug)]
pub struct ContaminationSpec {
    pub n: usize,
    pub alpha_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub scenario: Scenario,
    /// Error reference point; defaults to the modal signal parameters.
    pub reference: Option<ProductPoint>,
}

impl ContaminationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("n must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be at least 1".into()));
        }
        if self.alpha_grid.is_empty() {
            return Err(Error::InvalidInput("alpha grid must be nonempty".into()));
        }
        for a in &self.alpha_grid {
            if !(*a >= 0.0 && *a <= MAX_ALPHA) {
                return Err(Error::InvalidInput(format!(
                    "alpha {a} outside [0, {MAX_ALPHA}]"
                )));
            }
        }
        if let Scenario::Multivariate { d, rho } = &self.scenario {
            if *d < 2 {
                return Err(Error::InvalidInput("multivariate scenario needs d >= 2".into()));
            }
            if !(*rho > 0.0 && *rho < 1.0) {
                return Err(Error::InvalidInput("rho must lie in (0, 1)".into()));
            }
        }
        Ok(())
    }

    pub fn manifold(&self) -> ProductManifold {
        match &self.scenario {
            Scenario::Univariate => univariate_manifold(),
            Scenario::Multivariate { d, .. } => multivariate_manifold(*d),
        }
    }

    fn default_reference(&self) -> ProductPoint {
        match &self.scenario {
            Scenario::Univariate => univariate_reference(),
            Scenario::Multivariate { d, .. } => multivariate_reference(*d),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorKind {
    FrechetMean,
    GeometricMedian,
}

impl EstimatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorKind::FrechetMean => "frechet_mean",
            EstimatorKind::GeometricMedian => "geometric_median",
        }
    }
}

/// How the estimate behind a sweep row was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowTermination {
    Solver(Termination),
    Converged,
    NonConvergence,
}

impl RowTermination {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowTermination::Solver(t) => t.as_str(),
            RowTermination::Converged => "converged",
            RowTermination::NonConvergence => "non_convergence",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub alpha: f64,
    pub trial: usize,
    pub estimator: EstimatorKind,
    pub error: f64,
    pub termination: RowTermination,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Mean error over trials for one estimator at one α (by grid value).
    pub fn mean_error(&self, estimator: EstimatorKind, alpha: f64) -> Option<f64> {
        let errs: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.estimator == estimator && r.alpha == alpha)
            .map(|r| r.error)
            .collect();
        if errs.is_empty() {
            None
        } else {
            Some(errs.iter().sum::<f64>() / errs.len() as f64)
        }
    }
}

/// ℝ × ℝ₊, the (μ, σ) parameter space of univariate Gaussians.
pub fn univariate_manifold() -> ProductManifold {
    ProductManifold::new(vec![
        FactorManifold::euclidean(1).expect("dim 1"),
        FactorManifold::positive_half_line(),
    ])
    .expect("two factors")
}

/// ℝᵈ × SPD(d) under the Bures–Wasserstein metric.
pub fn multivariate_manifold(d: usize) -> ProductManifold {
    ProductManifold::new(vec![
        FactorManifold::euclidean(d).expect("positive dim"),
        FactorManifold::spd_bures_wasserstein(d).expect("positive dim"),
    ])
    .expect("two factors")
}

/// Modal signal parameters (μ, σ) = (−1, √½) of the univariate model.
pub fn univariate_reference() -> ProductPoint {
    ProductPoint::new(vec![
        FactorPoint::Euclidean(DVector::from_column_slice(&[-1.0])),
        FactorPoint::Positive(0.5f64.sqrt()),
    ])
}

/// Population signal parameters (0, I_d) of the multivariate model.
pub fn multivariate_reference(d: usize) -> ProductPoint {
    ProductPoint::new(vec![
        FactorPoint::Euclidean(DVector::zeros(d)),
        FactorPoint::Spd(SpdMatrix::identity(d)),
    ])
}

/// AR(1) covariance Σ(i,j) = ρ^|i−j|, SPD for ρ ∈ (0, 1).
pub fn ar1_covariance(d: usize, rho: f64) -> Result<SpdMatrix> {
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidInput(format!("rho {rho} outside (0, 1)")));
    }
    let sym = SymMatrix::from_fn(d, |i, j| rho.powi((i as i32 - j as i32).abs()))?;
    SpdMatrix::new(sym)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleKind {
    Signal,
    Noise,
}

/// Beta(5,5) via the ratio of two Gamma(5,1) draws.
fn beta55<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    let gamma = Gamma::new(5.0, 1.0).expect("valid shape");
    let x: f64 = gamma.sample(rng);
    let y: f64 = gamma.sample(rng);
    x / (x + y)
}

/// One univariate Gaussian parameter point (μ, σ) on ℝ × ℝ₊.
///
/// Signal: μ ~ N(−1, ¼), σ² ~ Beta(5,5).
/// Noise:  μ ~ N(5, 1),  σ² ~ 5·Beta(5,5).
pub fn sample_univariate<R: rand::Rng + ?Sized>(kind: SampleKind, rng: &mut R) -> ProductPoint {
    let (mu, var) = match kind {
        SampleKind::Signal => {
            let mu = Normal::new(-1.0, 0.5).expect("valid").sample(rng);
            (mu, beta55(rng))
        }
        SampleKind::Noise => {
            let mu = Normal::new(5.0, 1.0).expect("valid").sample(rng);
            (mu, 5.0 * beta55(rng))
        }
    };
    ProductPoint::new(vec![
        FactorPoint::Euclidean(DVector::from_column_slice(&[mu])),
        FactorPoint::Positive(var.sqrt()),
    ])
}

/// One multivariate Gaussian parameter point (μ̂, Σ̂) on ℝᵈ × SPD(d): the
/// MLEs of a batch of 2d draws from the population law.
///
/// Signal population: N_d(0, I).  Noise population: N_d(10·1, Σ_AR(ρ)).
/// A degenerate covariance MLE is resampled once, then reported as `NotSpd`.
pub fn sample_multivariate<R: rand::Rng + ?Sized>(
    kind: SampleKind,
    d: usize,
    rho: f64,
    rng: &mut R,
) -> Result<ProductPoint> {
    if d < 2 {
        return Err(Error::InvalidInput(
            "need d >= 2 so that 2d draws give a full-rank MLE".into(),
        ));
    }
    let transport = match kind {
        SampleKind::Signal => None,
        SampleKind::Noise => Some(sqrt_spd(&ar1_covariance(d, rho)?)),
    };
    let shift = match kind {
        SampleKind::Signal => 0.0,
        SampleKind::Noise => 10.0,
    };
    let normal = Normal::new(0.0, 1.0).expect("valid");
    let m = 2 * d;
    let mut attempt = 0;
    loop {
        let mut draws = Vec::with_capacity(m);
        for _ in 0..m {
            let z = DVector::from_fn(d, |_, _| normal.sample(rng));
            let x = match &transport {
                Some(a) => a.matrix() * z + DVector::from_element(d, shift),
                None => z,
            };
            draws.push(x);
        }
        let mut mean = DVector::zeros(d);
        for x in &draws {
            mean += x;
        }
        mean /= m as f64;
        let mut cov = nalgebra::DMatrix::zeros(d, d);
        for x in &draws {
            let c = x - &mean;
            cov += &c * c.transpose();
        }
        cov /= m as f64;
        match SpdMatrix::new(SymMatrix::from_matrix(&cov)?) {
            Ok(spd) => {
                return Ok(ProductPoint::new(vec![
                    FactorPoint::Euclidean(mean),
                    FactorPoint::Spd(spd),
                ]))
            }
            Err(e) => {
                if attempt >= 1 {
                    return Err(e);
                }
                attempt += 1;
            }
        }
    }
}

/// Replace ⌊αn⌋ points, chosen uniformly without replacement, by draws from
/// `noise_source`. Weights are left untouched.
pub fn contaminate<R: rand::Rng>(
    pm: &ProductManifold,
    sample: &WeightedSample,
    alpha: f64,
    mut noise_source: impl FnMut(&mut R) -> Result<ProductPoint>,
    rng: &mut R,
) -> Result<WeightedSample> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!("alpha {alpha} outside [0, 1)")));
    }
    let n = sample.len();
    let k = (alpha * n as f64).floor() as usize;
    let mut points = sample.points().to_vec();
    if k > 0 {
        let mut chosen = rand::seq::index::sample(rng, n, k).into_vec();
        chosen.sort_unstable();
        for idx in chosen {
            points[idx] = noise_source(rng)?;
        }
    }
    WeightedSample::new(pm, points, sample.weights().to_vec())
}

/// Product distance between an estimate and the reference point.
pub fn estimation_error(
    pm: &ProductManifold,
    estimate: &ProductPoint,
    reference: &ProductPoint,
) -> Result<f64> {
    pm.dist(estimate, reference)
}

/// Factor-wise Fréchet mean that treats a non-converged barycenter iteration
/// as a usable estimate (its last iterate) instead of an error.
fn product_mean_lenient(
    pm: &ProductManifold,
    sample: &WeightedSample,
) -> Result<(ProductPoint, bool)> {
    let n = sample.len();
    let mut converged = true;
    let mut components = Vec::with_capacity(pm.num_factors());
    for (i, f) in pm.factors().iter().enumerate() {
        let pts: Vec<FactorPoint> = (0..n)
            .map(|k| sample.points()[k].component(i).clone())
            .collect();
        match factor_mean(f, &pts, sample.weights()) {
            Ok(p) => components.push(p),
            Err(Error::NonConvergence { last, .. }) => {
                converged = false;
                components.push(*last);
            }
            Err(e) => return Err(e.at_factor(i)),
        }
    }
    Ok((ProductPoint::new(components), converged))
}

/// Run the full (α grid × trials) sweep: per cell, draw a signal sample,
/// contaminate it, estimate with both the product Fréchet mean and the
/// geometric median, and record product-distance errors to the reference.
pub fn run_sweep(spec: &ContaminationSpec, solver_cfg: &SolverConfig) -> Result<SweepResult> {
    spec.validate()?;
    solver_cfg.validate()?;
    let pm = spec.manifold();
    let reference = spec
        .reference
        .clone()
        .unwrap_or_else(|| spec.default_reference());

    let cells: Vec<(usize, usize)> = (0..spec.alpha_grid.len())
        .flat_map(|ai| (0..spec.trials).map(move |t| (ai, t)))
        .collect();

    let results: Vec<[SweepRow; 2]> = cells
        .par_iter()
        .map(|&(ai, trial)| -> Result<[SweepRow; 2]> {
            let alpha = spec.alpha_grid[ai];
            let mut rng = ChaCha8Rng::seed_from_u64(mix64(spec.seed, ai as u64, trial as u64));

            let mut points = Vec::with_capacity(spec.n);
            for _ in 0..spec.n {
                points.push(match &spec.scenario {
                    Scenario::Univariate => sample_univariate(SampleKind::Signal, &mut rng),
                    Scenario::Multivariate { d, rho } => {
                        sample_multivariate(SampleKind::Signal, *d, *rho, &mut rng)?
                    }
                });
            }
            let clean = WeightedSample::uniform(&pm, points)?;
            let scenario = spec.scenario.clone();
            let contaminated = contaminate(
                &pm,
                &clean,
                alpha,
                |r: &mut ChaCha8Rng| match &scenario {
                    Scenario::Univariate => Ok(sample_univariate(SampleKind::Noise, r)),
                    Scenario::Multivariate { d, rho } => {
                        sample_multivariate(SampleKind::Noise, *d, *rho, r)
                    }
                },
                &mut rng,
            )?;

            let (mean, mean_converged) = product_mean_lenient(&pm, &contaminated)?;
            let mean_error = estimation_error(&pm, &mean, &reference)?;

            let report = solve(&pm, &contaminated, Some(&mean), solver_cfg)?;
            let median_error = estimation_error(&pm, &report.minimizer, &reference)?;

            Ok([
                SweepRow {
                    alpha,
                    trial,
                    estimator: EstimatorKind::FrechetMean,
                    error: mean_error,
                    termination: if mean_converged {
                        RowTermination::Converged
                    } else {
                        RowTermination::NonConvergence
                    },
                },
                SweepRow {
                    alpha,
                    trial,
                    estimator: EstimatorKind::GeometricMedian,
                    error: median_error,
                    termination: RowTermination::Solver(report.termination),
                },
            ])
        })
        .collect::<Result<Vec<_>>>()?;

    let rows = results.into_iter().flatten().collect();
    Ok(SweepResult { rows })
}

#[derive(Clone, Copy, Debug)]
pub struct BreakdownRow {
    pub r: f64,
    /// Distance from the contaminated median to the nearest clean point.
    pub distance: f64,
}

/// Move total weight `contaminant_weight` onto a single point placed at
/// product distance R from the clean cloud along a fixed geodesic ray, solve
/// for the median, and report its distance to the clean points for each R.
pub fn breakdown_probe(
    pm: &ProductManifold,
    clean: &WeightedSample,
    contaminant_weight: f64,
    r_grid: &[f64],
    solver_cfg: &SolverConfig,
) -> Result<Vec<BreakdownRow>> {
    if !(contaminant_weight > 0.0 && contaminant_weight < 1.0) {
        return Err(Error::InvalidInput("contaminant weight must lie in (0, 1)".into()));
    }
    if (contaminant_weight - 0.5).abs() < 1e-9 {
        return Err(Error::InvalidInput(
            "contaminant weight 1/2 is the knife edge; probe excludes it".into(),
        ));
    }
    solver_cfg.validate()?;
    let base = &clean.points()[0];
    let direction = unbounded_direction(pm, base)?;
    let norm = pm.norm(base, &direction)?;
    let unit = direction.scaled(1.0 / norm);

    let mut rows = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::InvalidInput(format!("R {r} must be nonnegative")));
        }
        let contaminant = pm.exp(base, &unit.scaled(r))?;
        let mut points = clean.points().to_vec();
        points.push(contaminant);
        let mut weights: Vec<f64> = clean
            .weights()
            .iter()
            .map(|w| w * (1.0 - contaminant_weight))
            .collect();
        weights.push(contaminant_weight);
        let contaminated = WeightedSample::new(pm, points, weights)?;
        let report = solve(pm, &contaminated, None, solver_cfg)?;
        let mut distance = f64::INFINITY;
        for p in clean.points() {
            distance = distance.min(pm.dist(&report.minimizer, p)?);
        }
        rows.push(BreakdownRow { r, distance });
    }
    Ok(rows)
}

/// First factor direction along which the product is unbounded: a coordinate
/// ray on a Euclidean factor, the increasing direction on the half-line, or
/// the identity direction on the SPD cone. All-sphere products are compact
/// and rejected.
fn unbounded_direction(pm: &ProductManifold, base: &ProductPoint) -> Result<crate::product::ProductTangent> {
    let mut components: Vec<FactorTangent> = pm
        .factors()
        .iter()
        .zip(base.components())
        .map(|(f, c)| f.zero_tangent(c))
        .collect();
    for (i, f) in pm.factors().iter().enumerate() {
        match f {
            FactorManifold::Euclidean { dim } => {
                let mut v = DVector::zeros(*dim);
                v[0] = 1.0;
                components[i] = FactorTangent::Euclidean(v);
                return Ok(crate::product::ProductTangent::new(components));
            }
            FactorManifold::PositiveHalfLine => {
                components[i] = FactorTangent::Positive(1.0);
                return Ok(crate::product::ProductTangent::new(components));
            }
            FactorManifold::SpdBuresWasserstein { dim, .. } => {
                components[i] = FactorTangent::Sym(SymMatrix::identity(*dim));
                return Ok(crate::product::ProductTangent::new(components));
            }
            FactorManifold::Sphere { .. } => continue,
        }
    }
    Err(Error::InvalidInput(
        "product has no noncompact factor to escape along".into(),
    ))
}

#[derive(Clone, Copy, Debug)]
pub struct PerturbationRow {
    pub epsilon: f64,
    /// Mean displacement of the median over the probe trials.
    pub displacement: f64,
}

/// Perturb every datum by a random tangent of norm ε, re-solve, and record
/// the median displacement, averaged over `trials` per ε.
pub fn perturbation_probe(
    pm: &ProductManifold,
    sample: &WeightedSample,
    epsilon_grid: &[f64],
    trials: usize,
    seed: u64,
    solver_cfg: &SolverConfig,
) -> Result<Vec<PerturbationRow>> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    solver_cfg.validate()?;
    let base_report = solve(pm, sample, None, solver_cfg)?;
    let base = base_report.minimizer;

    let mut rows = Vec::with_capacity(epsilon_grid.len());
    for (ei, &eps) in epsilon_grid.iter().enumerate() {
        if !eps.is_finite() || eps < 0.0 {
            return Err(Error::InvalidInput(format!("epsilon {eps} must be nonnegative")));
        }
        let displacements: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|t| -> Result<f64> {
                let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed, ei as u64, t as u64));
                let mut points = Vec::with_capacity(sample.len());
                for p in sample.points() {
                    points.push(perturb_point(pm, p, eps, &mut rng)?);
                }
                let perturbed = WeightedSample::new(pm, points, sample.weights().to_vec())?;
                let report = solve(pm, &perturbed, Some(&base), solver_cfg)?;
                pm.dist(&report.minimizer, &base)
            })
            .collect::<Result<Vec<_>>>()?;
        let mean = displacements.iter().sum::<f64>() / trials as f64;
        rows.push(PerturbationRow { epsilon: eps, displacement: mean });
    }
    Ok(rows)
}

fn perturb_point<R: rand::Rng + ?Sized>(
    pm: &ProductManifold,
    p: &ProductPoint,
    eps: f64,
    rng: &mut R,
) -> Result<ProductPoint> {
    let mut components = Vec::with_capacity(pm.num_factors());
    for (f, c) in pm.factors().iter().zip(p.components()) {
        components.push(f.random_tangent(c, rng)?);
    }
    let tangent = crate::product::ProductTangent::new(components);
    let norm = pm.norm(p, &tangent)?;
    if eps == 0.0 || norm == 0.0 {
        return Ok(p.clone());
    }
    // Oversized SPD tangents are shrunk; the perturbation stays within ε.
    let mut scale = eps / norm;
    for _ in 0..40 {
        match pm.exp(p, &tangent.scaled(scale)) {
            Ok(q) => return Ok(q),
            Err(Error::LeftManifold { .. }) => scale *= 0.5,
            Err(e) => return Err(e),
        }
    }
    Ok(p.clone())
}

/// Least-squares slope of log displacement against log ε over the rows with
/// positive entries. `None` when fewer than two usable rows exist.
pub fn fit_loglog_slope(rows: &[PerturbationRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.epsilon > 0.0 && r.displacement > 0.0)
        .map(|r| (r.epsilon.ln(), r.displacement.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ar1_matches_closed_form() {
        let s = ar1_covariance(3, 0.5).unwrap();
        let expect = [
            [1.0, 0.5, 0.25],
            [0.5, 1.0, 0.5],
            [0.25, 0.5, 1.0],
        ];
        for (i, row) in expect.iter().enumerate() {
            for (j, want) in row.iter().enumerate() {
                assert!((s.matrix()[(i, j)] - want).abs() < 1e-15);
            }
        }
        // Diagonal is one for any rho, and large instances stay SPD.
        let s = ar1_covariance(10, 0.9).unwrap();
        for i in 0..10 {
            assert_eq!(s.matrix()[(i, i)], 1.0);
        }
        assert!(matches!(
            ar1_covariance(3, 1.0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn univariate_signal_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let mut mu_sum = 0.0;
        for _ in 0..n {
            let p = sample_univariate(SampleKind::Signal, &mut rng);
            if let FactorPoint::Euclidean(v) = p.component(0) {
                mu_sum += v[0];
            }
            if let FactorPoint::Positive(s) = p.component(1) {
                let var = s * s;
                assert!(var > 0.0 && var < 1.0);
            }
        }
        let mu_bar = mu_sum / n as f64;
        assert!((mu_bar + 1.0).abs() < 0.01, "mean of mu was {mu_bar}");
    }

    #[test]
    fn univariate_noise_sigma_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..10_000 {
            let p = sample_univariate(SampleKind::Noise, &mut rng);
            if let FactorPoint::Positive(s) = p.component(1) {
                let var = s * s;
                assert!(var > 0.0 && var < 5.0);
            }
        }
    }

    #[test]
    fn multivariate_signal_mean_norm_concentrates() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let d = 10;
        let reps = 2000;
        let mut acc = 0.0;
        for _ in 0..reps {
            let p = sample_multivariate(SampleKind::Signal, d, 0.5, &mut rng).unwrap();
            if let FactorPoint::Euclidean(v) = p.component(0) {
                acc += v.norm_squared();
            }
        }
        let mean_sq = acc / reps as f64;
        // E‖v̄‖² = d/(2d) = 1/2.
        assert!((mean_sq - 0.5).abs() < 0.05, "E norm² was {mean_sq}");
    }

    #[test]
    fn multivariate_noise_centered_at_ten() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let d = 5;
        let mut acc = DVector::zeros(d);
        let reps = 500;
        for _ in 0..reps {
            let p = sample_multivariate(SampleKind::Noise, d, 0.5, &mut rng).unwrap();
            if let FactorPoint::Euclidean(v) = p.component(0) {
                acc += v;
            }
        }
        acc /= reps as f64;
        for i in 0..d {
            assert!((acc[i] - 10.0).abs() < 0.5, "entry {i} was {}", acc[i]);
        }
    }

    #[test]
    fn contaminate_replaces_floor_alpha_n() {
        let pm = univariate_manifold();
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let points: Vec<ProductPoint> =
            (0..1000).map(|_| sample_univariate(SampleKind::Signal, &mut rng)).collect();
        let sample = WeightedSample::uniform(&pm, points).unwrap();

        for (alpha, expect) in [(0.0, 0usize), (0.5, 500), (0.499, 499)] {
            let mut rng = ChaCha8Rng::seed_from_u64(47);
            let out = contaminate(
                &pm,
                &sample,
                alpha,
                |r: &mut ChaCha8Rng| Ok(sample_univariate(SampleKind::Noise, r)),
                &mut rng,
            )
            .unwrap();
            let changed = out
                .points()
                .iter()
                .zip(sample.points())
                .filter(|(a, b)| a != b)
                .count();
            assert_eq!(changed, expect, "alpha {alpha}");
            assert_eq!(out.weights(), sample.weights());
        }
    }

    #[test]
    fn estimation_error_trivial_cases() {
        let pm = univariate_manifold();
        let r = univariate_reference();
        assert_eq!(estimation_error(&pm, &r, &r).unwrap(), 0.0);
        let shifted = ProductPoint::new(vec![
            r.component(0).clone(),
            FactorPoint::Positive(0.5f64.sqrt() + 0.1),
        ]);
        assert!((estimation_error(&pm, &shifted, &r).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn sweep_is_deterministic() {
        let spec = ContaminationSpec {
            n: 60,
            alpha_grid: vec![0.0, 0.2],
            trials: 2,
            seed: 99,
            scenario: Scenario::Univariate,
            reference: None,
        };
        let cfg = SolverConfig::default();
        let a = run_sweep(&spec, &cfg).unwrap();
        let b = run_sweep(&spec, &cfg).unwrap();
        assert_eq!(a.rows.len(), b.rows.len());
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!(x.error.to_bits(), y.error.to_bits());
            assert_eq!(x.estimator, y.estimator);
            assert_eq!(x.termination, y.termination);
        }
        // One row per (alpha, trial, estimator), in fixed order.
        assert_eq!(a.rows.len(), 2 * 2 * 2);
    }

    #[test]
    fn mix64_distinguishes_streams() {
        assert_ne!(mix64(1, 0, 0), mix64(1, 0, 1));
        assert_ne!(mix64(1, 0, 0), mix64(1, 1, 0));
        assert_ne!(mix64(1, 0, 0), mix64(2, 0, 0));
        assert_eq!(mix64(7, 3, 5), mix64(7, 3, 5));
    }

    #[test]
    fn breakdown_minority_weight_stays_bounded() {
        let pm = ProductManifold::new(vec![
            FactorManifold::euclidean(1).unwrap(),
            FactorManifold::euclidean(1).unwrap(),
        ])
        .unwrap();
        let mk = |x: f64, y: f64| {
            ProductPoint::new(vec![
                FactorPoint::Euclidean(DVector::from_column_slice(&[x])),
                FactorPoint::Euclidean(DVector::from_column_slice(&[y])),
            ])
        };
        let clean = WeightedSample::uniform(
            &pm,
            vec![mk(0.0, 0.0), mk(1.0, 0.0), mk(0.0, 1.0), mk(1.0, 1.0), mk(0.5, 0.5)],
        )
        .unwrap();
        let diam = 2f64.sqrt();
        let cfg = SolverConfig::default();
        let rows = breakdown_probe(&pm, &clean, 0.4, &[0.0, 10.0, 1000.0], &cfg).unwrap();
        for row in &rows {
            assert!(
                row.distance <= diam / (1.0 - 0.8) + 1e-6,
                "R {}: distance {}",
                row.r,
                row.distance
            );
        }
    }

    #[test]
    fn breakdown_majority_weight_escapes() {
        let pm = ProductManifold::new(vec![
            FactorManifold::euclidean(1).unwrap(),
            FactorManifold::euclidean(1).unwrap(),
        ])
        .unwrap();
        let mk = |x: f64, y: f64| {
            ProductPoint::new(vec![
                FactorPoint::Euclidean(DVector::from_column_slice(&[x])),
                FactorPoint::Euclidean(DVector::from_column_slice(&[y])),
            ])
        };
        let clean =
            WeightedSample::uniform(&pm, vec![mk(0.0, 0.0), mk(1.0, 0.0), mk(0.0, 1.0)]).unwrap();
        let diam = 2f64.sqrt();
        let cfg = SolverConfig::default();
        let rows = breakdown_probe(&pm, &clean, 0.6, &[0.0, 10.0, 100.0, 1000.0], &cfg).unwrap();
        // A contaminant inside the hull keeps the median there even with
        // majority weight; far contaminants drag it along.
        assert!(rows[0].distance <= diam + 1e-9, "R 0: distance {}", rows[0].distance);
        for row in &rows[1..] {
            assert!(
                row.distance >= row.r - 2.0 * diam,
                "R {}: distance {}",
                row.r,
                row.distance
            );
        }
        assert!(rows[1].distance < rows[2].distance && rows[2].distance < rows[3].distance);
        // Knife edge is rejected.
        assert!(breakdown_probe(&pm, &clean, 0.5, &[1.0], &cfg).is_err());
    }

    #[test]
    fn perturbation_zero_epsilon_zero_displacement() {
        let pm = univariate_manifold();
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let points: Vec<ProductPoint> =
            (0..40).map(|_| sample_univariate(SampleKind::Signal, &mut rng)).collect();
        let sample = WeightedSample::uniform(&pm, points).unwrap();
        let cfg = SolverConfig::default();
        let rows = perturbation_probe(&pm, &sample, &[0.0, 1e-3], 3, 7, &cfg).unwrap();
        assert_eq!(rows[0].displacement, 0.0);
        assert!(rows[1].displacement > 0.0);
    }
}

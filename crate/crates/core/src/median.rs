//! Geometric-median solvers on product manifolds.
//!
//! The objective F(z) = Σ w_i · d(z, x_i) couples the factors through the
//! joint product distance. Both solvers update every factor simultaneously
//! using per-factor exponential maps, with the joint distance appearing in
//! the per-datum scaling:
//!
//! - subgradient descent with the η₀/√(k+1) schedule;
//! - a Weiszfeld fixed-point iteration with adaptive weights
//!   w̃_i ∝ w_i / d(z, x_i), plus ε-regularization and damping safeguards;
//! - a hybrid that starts with subgradient steps and switches to Weiszfeld
//!   once the residual is small.
//!
//! At a point coinciding with datum j the subdifferential gains the ball
//! term w_j·B̄. The min-norm selection used for descent directions takes the
//! zero element of each ball; datum optimality is decided separately by the
//! ball test ‖Σ_{i≠j} w_i·log(x_i)/d_i‖ ≤ w_j.

use crate::error::{Error, Result};
use crate::frechet::product_mean;
use crate::product::{ProductManifold, ProductPoint, ProductTangent, WeightedSample};

/// Slack added to the ball-case datum-optimality test.
const BALL_TOL: f64 = 1e-10;
/// Retry budget when an exponential-map step leaves the SPD cone.
const MAX_STEP_RETRIES: u32 = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverMethod {
    Subgradient,
    Weiszfeld,
    Hybrid,
}

impl SolverMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverMethod::Subgradient => "subgradient",
            SolverMethod::Weiszfeld => "weiszfeld",
            SolverMethod::Hybrid => "hybrid",
        }
    }
}

impl std::str::FromStr for SolverMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subgradient" => Ok(SolverMethod::Subgradient),
            "weiszfeld" => Ok(SolverMethod::Weiszfeld),
            "hybrid" => Ok(SolverMethod::Hybrid),
            other => Err(Error::InvalidInput(format!("unknown method '{other}'"))),
        }
    }
}

/// Solver hyperparameters. `eta0 = None` picks the scale-aware default
/// F(init) / max(1, n) at solve time.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub method: SolverMethod,
    pub max_iters: usize,
    pub eta0: Option<f64>,
    pub tol_step: f64,
    pub tol_residual: f64,
    pub weiszfeld_epsilon: f64,
    pub damping: f64,
    pub hybrid_switch_residual: f64,
    pub coincidence_tol: f64,
    /// Reserved for randomized tie-break draws; the current tie-break rules
    /// are deterministic and do not consume it.
    pub seed: u64,
    /// Keep the full iterate trace in the report (diagnostics only).
    pub record_points: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: SolverMethod::Hybrid,
            max_iters: 10_000,
            eta0: None,
            tol_step: 1e-12,
            tol_residual: 1e-9,
            weiszfeld_epsilon: 0.0,
            damping: 0.0,
            hybrid_switch_residual: 1e-2,
            coincidence_tol: 1e-11,
            seed: 0,
            record_points: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("max_iters must be positive".into()));
        }
        if let Some(e) = self.eta0 {
            if !e.is_finite() || e <= 0.0 {
                return Err(Error::InvalidInput("eta0 must be positive".into()));
            }
        }
        for (name, v) in [
            ("tol_step", self.tol_step),
            ("tol_residual", self.tol_residual),
            ("hybrid_switch_residual", self.hybrid_switch_residual),
            ("coincidence_tol", self.coincidence_tol),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidInput(format!("{name} must be positive")));
            }
        }
        if !self.weiszfeld_epsilon.is_finite() || self.weiszfeld_epsilon < 0.0 {
            return Err(Error::InvalidInput("weiszfeld_epsilon must be nonnegative".into()));
        }
        if !(0.0..=1.0).contains(&self.damping) {
            return Err(Error::InvalidInput("damping must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    ResidualTol,
    StepTol,
    MaxIters,
    AtDatum,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::ResidualTol => "residual_tol",
            Termination::StepTol => "step_tol",
            Termination::MaxIters => "max_iters",
            Termination::AtDatum => "at_datum",
        }
    }
}

/// Safeguard events recorded during a solve.
#[derive(Clone, Debug, PartialEq)]
pub enum SolverEvent {
    /// The half-line floor clamped a coordinate on `factor`.
    ClampApplied { iteration: usize, factor: usize },
    /// The step left the SPD cone and was shrunk `halvings` times.
    StepRetry { iteration: usize, halvings: u32 },
    /// The iterate coincided with a non-optimal datum and took a
    /// subgradient-style escape step.
    DatumEscape { iteration: usize, datum: usize },
    /// Hybrid phase change.
    SwitchedToWeiszfeld { iteration: usize },
}

/// Quantities observed during the run (not a-priori bounds): the distance
/// from the initial point to the returned minimizer, and the largest
/// subgradient norm encountered.
#[derive(Clone, Copy, Debug)]
pub struct SolverDiagnostics {
    pub initial_distance: f64,
    pub subgradient_bound: f64,
}

#[derive(Clone, Debug)]
pub struct SolverReport {
    pub minimizer: ProductPoint,
    pub objective_trace: Vec<f64>,
    pub best_objective: f64,
    pub residual_trace: Vec<f64>,
    pub iterations_used: usize,
    pub termination: Termination,
    pub diagnostics: SolverDiagnostics,
    pub events: Vec<SolverEvent>,
    pub point_trace: Option<Vec<ProductPoint>>,
}

/// F(z) = Σ w_i · d(z, x_i).
pub fn objective(pm: &ProductManifold, sample: &WeightedSample, z: &ProductPoint) -> Result<f64> {
    let mut acc = 0.0;
    for (p, w) in sample.iter() {
        acc += w * pm.dist(z, p)?;
    }
    Ok(acc)
}

/// The minimum-norm subgradient of F at `z` under the zero selection for
/// every ball term: ξ = −Σ_{i : d_i > 0} (w_i / d_i) · log_z(x_i).
///
/// Factors where a component distance vanishes contribute the zero vector
/// automatically, since the factor logarithm vanishes there. Data coinciding
/// with `z` contribute nothing.
pub fn min_norm_subgradient(
    pm: &ProductManifold,
    sample: &WeightedSample,
    z: &ProductPoint,
) -> Result<ProductTangent> {
    let mut xi = pm.zero_tangent(z);
    for (p, w) in sample.iter() {
        let (log, d) = pm.log_and_dist_tie_break(z, p)?;
        if d > 0.0 {
            xi.add_scaled(&log, -w / d)?;
        }
    }
    Ok(xi)
}

/// Distance from zero to the subdifferential ∂F(z), minimized over the ball
/// selections: data coinciding with `z` absorb up to their weight of the
/// smooth pull. Zero exactly when `z` satisfies first-order optimality —
/// both at smooth points and at datum minimizers.
pub fn first_order_residual(
    pm: &ProductManifold,
    sample: &WeightedSample,
    z: &ProductPoint,
) -> Result<f64> {
    let mut xi = pm.zero_tangent(z);
    let mut ball_weight = 0.0;
    for (p, w) in sample.iter() {
        let (log, d) = pm.log_and_dist_tie_break(z, p)?;
        if d == 0.0 {
            ball_weight += w;
        } else {
            xi.add_scaled(&log, -w / d)?;
        }
    }
    Ok((pm.norm(z, &xi)? - ball_weight).max(0.0))
}

/// Adaptive Weiszfeld weights w̃_i ∝ w_i / d(z, x_i), normalized to sum one.
/// With `weiszfeld_epsilon > 0`, distances are floored at ε; otherwise a zero
/// distance is an error.
pub fn weiszfeld_weights(
    pm: &ProductManifold,
    sample: &WeightedSample,
    z: &ProductPoint,
    epsilon: f64,
) -> Result<Vec<f64>> {
    let mut q = Vec::with_capacity(sample.len());
    for (index, (p, w)) in sample.iter().enumerate() {
        let mut d = pm.dist(z, p)?;
        if epsilon > 0.0 {
            d = d.max(epsilon);
        } else if d == 0.0 {
            return Err(Error::CoincidentIterate { index });
        }
        q.push(w / d);
    }
    let s: f64 = q.iter().sum();
    for v in &mut q {
        *v /= s;
    }
    Ok(q)
}

/// Run the solver selected by `cfg.method`, initializing at the product
/// Fréchet mean unless an explicit starting point is given.
pub fn solve(
    pm: &ProductManifold,
    sample: &WeightedSample,
    init: Option<&ProductPoint>,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    let default_init;
    let start = match init {
        Some(p) => p,
        None => {
            default_init = product_mean(pm, sample)?;
            &default_init
        }
    };
    match cfg.method {
        SolverMethod::Subgradient => subgradient_solve(pm, sample, start, cfg),
        SolverMethod::Weiszfeld => weiszfeld_solve(pm, sample, start, cfg),
        SolverMethod::Hybrid => hybrid_solve(pm, sample, start, cfg),
    }
}

/// Riemannian subgradient descent with step sizes η_k = η₀ / √(k+1).
/// Returns the best-objective iterate, not the last one.
pub fn subgradient_solve(
    pm: &ProductManifold,
    sample: &WeightedSample,
    init: &ProductPoint,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    cfg.validate()?;
    pm.validate_point(init)?;
    run_solver(pm, sample, init, cfg, Scheme::Subgradient)
}

/// Product-aware Weiszfeld iteration with ε-regularization, damping, and the
/// datum coincidence handling described in the module docs.
pub fn weiszfeld_solve(
    pm: &ProductManifold,
    sample: &WeightedSample,
    init: &ProductPoint,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    cfg.validate()?;
    pm.validate_point(init)?;
    run_solver(pm, sample, init, cfg, Scheme::Weiszfeld)
}

/// Subgradient phase until the residual reaches `hybrid_switch_residual`,
/// then Weiszfeld from the best subgradient iterate. Traces are concatenated
/// with a `SwitchedToWeiszfeld` marker.
pub fn hybrid_solve(
    pm: &ProductManifold,
    sample: &WeightedSample,
    init: &ProductPoint,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    cfg.validate()?;
    pm.validate_point(init)?;

    let mut phase1_cfg = cfg.clone();
    phase1_cfg.tol_residual = cfg.hybrid_switch_residual.max(cfg.tol_residual);
    // The opening phase only needs to move off degenerate starts; the
    // Weiszfeld phase does the local work with the full budget.
    phase1_cfg.max_iters = (cfg.max_iters / 20).max(50).min(cfg.max_iters);
    let phase1 = run_solver(pm, sample, init, &phase1_cfg, Scheme::Subgradient)?;
    if phase1.termination == Termination::AtDatum {
        return Ok(phase1);
    }

    let switch_at = phase1.iterations_used;
    let phase2 = run_solver(pm, sample, &phase1.minimizer, cfg, Scheme::Weiszfeld)?;

    let mut objective_trace = phase1.objective_trace;
    objective_trace.extend_from_slice(&phase2.objective_trace);
    let mut residual_trace = phase1.residual_trace;
    residual_trace.extend_from_slice(&phase2.residual_trace);

    let mut events = phase1.events;
    events.push(SolverEvent::SwitchedToWeiszfeld { iteration: switch_at });
    events.extend(phase2.events.into_iter().map(|e| shift_event(e, switch_at)));

    let (best_objective, minimizer) = if phase2.best_objective <= phase1.best_objective {
        (phase2.best_objective, phase2.minimizer)
    } else {
        (phase1.best_objective, phase1.minimizer)
    };

    let point_trace = match (phase1.point_trace, phase2.point_trace) {
        (Some(mut a), Some(b)) => {
            a.extend(b);
            Some(a)
        }
        _ => None,
    };

    Ok(SolverReport {
        diagnostics: SolverDiagnostics {
            initial_distance: pm.dist(init, &minimizer)?,
            subgradient_bound: phase1
                .diagnostics
                .subgradient_bound
                .max(phase2.diagnostics.subgradient_bound),
        },
        minimizer,
        objective_trace,
        best_objective,
        residual_trace,
        iterations_used: switch_at + phase2.iterations_used,
        termination: phase2.termination,
        events,
        point_trace,
    })
}

fn shift_event(e: SolverEvent, offset: usize) -> SolverEvent {
    match e {
        SolverEvent::ClampApplied { iteration, factor } => SolverEvent::ClampApplied {
            iteration: iteration + offset,
            factor,
        },
        SolverEvent::StepRetry { iteration, halvings } => SolverEvent::StepRetry {
            iteration: iteration + offset,
            halvings,
        },
        SolverEvent::DatumEscape { iteration, datum } => SolverEvent::DatumEscape {
            iteration: iteration + offset,
            datum,
        },
        SolverEvent::SwitchedToWeiszfeld { iteration } => SolverEvent::SwitchedToWeiszfeld {
            iteration: iteration + offset,
        },
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Scheme {
    Subgradient,
    Weiszfeld,
}

struct IterData {
    logs: Vec<ProductTangent>,
    dists: Vec<f64>,
    objective: f64,
}

fn iteration_data(pm: &ProductManifold, sample: &WeightedSample, z: &ProductPoint) -> Result<IterData> {
    let n = sample.len();
    let mut logs = Vec::with_capacity(n);
    let mut dists = Vec::with_capacity(n);
    let mut objective = 0.0;
    // Fixed index order keeps one iteration bit-reproducible.
    for (p, w) in sample.iter() {
        let (log, d) = pm.log_and_dist_tie_break(z, p)?;
        objective += w * d;
        logs.push(log);
        dists.push(d);
    }
    Ok(IterData { logs, dists, objective })
}

/// ξ = −Σ_{i ∉ skip, d_i > 0} (w_i / d_i)·log_i and its product norm.
fn smooth_part(
    pm: &ProductManifold,
    sample: &WeightedSample,
    z: &ProductPoint,
    data: &IterData,
    skip: &[usize],
) -> Result<(ProductTangent, f64)> {
    let mut xi = pm.zero_tangent(z);
    for (i, w) in sample.weights().iter().enumerate() {
        if skip.contains(&i) || data.dists[i] == 0.0 {
            continue;
        }
        xi.add_scaled(&data.logs[i], -w / data.dists[i])?;
    }
    let norm = pm.norm(z, &xi)?;
    Ok((xi, norm))
}

/// Apply `exp` with up to `MAX_STEP_RETRIES` halvings when the step leaves
/// the manifold. Returns the new point, the halving count, and the clamped
/// factor indices, or `None` when every retry failed.
fn attempt_step(
    pm: &ProductManifold,
    z: &ProductPoint,
    step: &ProductTangent,
) -> Result<Option<(ProductPoint, u32, Vec<usize>)>> {
    let mut scale = 1.0;
    for halvings in 0..=MAX_STEP_RETRIES {
        match pm.exp_flagged(z, &step.scaled(scale)) {
            Ok((next, clamped)) => return Ok(Some((next, halvings, clamped))),
            Err(Error::LeftManifold { .. }) => {
                scale *= 0.5;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

fn run_solver(
    pm: &ProductManifold,
    sample: &WeightedSample,
    init: &ProductPoint,
    cfg: &SolverConfig,
    scheme: Scheme,
) -> Result<SolverReport> {
    let n = sample.len();
    let weights = sample.weights();

    let mut z = init.clone();
    let mut objective_trace = Vec::new();
    let mut residual_trace = Vec::new();
    let mut events = Vec::new();
    let mut point_trace = if cfg.record_points { Some(Vec::new()) } else { None };

    let mut best_objective = f64::INFINITY;
    let mut best_point = z.clone();
    let mut subgradient_bound = 0.0f64;
    let mut eta0 = cfg.eta0;

    let mut termination = Termination::MaxIters;
    let mut iterations_used = 0;

    for k in 0..cfg.max_iters {
        let mut data = iteration_data(pm, sample, &z)?;

        // Coincidence handling: snap onto the datum so its term drops out of
        // the smooth part exactly, then decide datum optimality.
        let coincident: Vec<usize> = (0..n)
            .filter(|&i| data.dists[i] <= cfg.coincidence_tol)
            .collect();
        if !coincident.is_empty() && pm.dist(&z, &sample.points()[coincident[0]])? > 0.0 {
            z = sample.points()[coincident[0]].clone();
            data = iteration_data(pm, sample, &z)?;
        }
        let coincident: Vec<usize> = (0..n)
            .filter(|&i| data.dists[i] <= cfg.coincidence_tol)
            .collect();

        iterations_used = k + 1;
        objective_trace.push(data.objective);
        if let Some(trace) = point_trace.as_mut() {
            trace.push(z.clone());
        }
        if data.objective < best_objective {
            best_objective = data.objective;
            best_point = z.clone();
        }
        if eta0.is_none() {
            // Scale-aware default step: initial objective over max(1, n).
            let base = data.objective / (n.max(1) as f64);
            eta0 = Some(if base > 0.0 { base } else { 1.0 });
        }

        let step = if coincident.is_empty() {
            let (xi, residual) = smooth_part(pm, sample, &z, &data, &[])?;
            residual_trace.push(residual);
            subgradient_bound = subgradient_bound.max(residual);
            if residual <= cfg.tol_residual {
                termination = Termination::ResidualTol;
                break;
            }
            match scheme {
                Scheme::Subgradient => {
                    let eta = eta0.unwrap() / ((k + 1) as f64).sqrt();
                    xi.scaled(-eta)
                }
                Scheme::Weiszfeld => {
                    // w̃_i ∝ w_i / d_i with the optional ε floor, then the
                    // tangent average Δ = Σ w̃_i log_i.
                    let mut q: Vec<f64> = (0..n)
                        .map(|i| {
                            let d = if cfg.weiszfeld_epsilon > 0.0 {
                                data.dists[i].max(cfg.weiszfeld_epsilon)
                            } else {
                                data.dists[i]
                            };
                            weights[i] / d
                        })
                        .collect();
                    let s: f64 = q.iter().sum();
                    for v in &mut q {
                        *v /= s;
                    }
                    let mut delta = pm.zero_tangent(&z);
                    for (log, qi) in data.logs.iter().zip(&q) {
                        delta.add_scaled(log, *qi)?;
                    }
                    delta.scaled(1.0 - cfg.damping)
                }
            }
        } else {
            // Ball case. The full subdifferential is smooth + w_J·B̄, so the
            // datum is optimal iff the smooth norm is at most w_J.
            let w_j: f64 = coincident.iter().map(|&i| weights[i]).sum();
            let (smooth, smooth_norm) = smooth_part(pm, sample, &z, &data, &coincident)?;
            residual_trace.push(smooth_norm);
            subgradient_bound = subgradient_bound.max(smooth_norm);
            if smooth_norm <= w_j + BALL_TOL {
                termination = Termination::AtDatum;
                break;
            }
            match scheme {
                Scheme::Subgradient => {
                    let eta = eta0.unwrap() / ((k + 1) as f64).sqrt();
                    smooth.scaled(-eta)
                }
                Scheme::Weiszfeld => {
                    // Escape step: one subgradient-style update along the
                    // pull of the non-coincident data, shrunk by the ball
                    // absorption factor (1 − w_J/‖R‖) and scaled by the
                    // inverse-distance normalization of the remaining terms.
                    events.push(SolverEvent::DatumEscape { iteration: k, datum: coincident[0] });
                    let s: f64 = (0..n)
                        .filter(|i| !coincident.contains(i))
                        .map(|i| weights[i] / data.dists[i])
                        .sum();
                    let shrink = (1.0 - w_j / smooth_norm) / s;
                    smooth.scaled(-(1.0 - cfg.damping) * shrink)
                }
            }
        };

        let step_norm = pm.norm(&z, &step)?;
        if step_norm <= cfg.tol_step {
            termination = Termination::StepTol;
            break;
        }

        match attempt_step(pm, &z, &step)? {
            Some((next, halvings, clamped)) => {
                if halvings > 0 {
                    events.push(SolverEvent::StepRetry { iteration: k, halvings });
                }
                for factor in clamped {
                    events.push(SolverEvent::ClampApplied { iteration: k, factor });
                }
                if next == z {
                    // The step rounded to no movement; treat as converged.
                    termination = Termination::StepTol;
                    break;
                }
                z = next;
            }
            None => {
                termination = Termination::MaxIters;
                break;
            }
        }
    }

    // Subgradient returns the best-objective iterate (the guarantee is on
    // min over j ≤ k); Weiszfeld returns the fixed-point iterate that met
    // the termination test. AtDatum always returns the datum itself.
    let minimizer = match (termination, scheme) {
        (Termination::AtDatum, _) => z,
        (_, Scheme::Weiszfeld) => z,
        (_, Scheme::Subgradient) => best_point,
    };
    Ok(SolverReport {
        diagnostics: SolverDiagnostics {
            initial_distance: pm.dist(init, &minimizer)?,
            subgradient_bound,
        },
        best_objective,
        objective_trace,
        residual_trace,
        iterations_used,
        termination,
        events,
        point_trace,
        minimizer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{FactorManifold, FactorPoint, FactorTangent};
    use nalgebra::DVector;

    fn flat2() -> ProductManifold {
        ProductManifold::new(vec![
            FactorManifold::euclidean(1).unwrap(),
            FactorManifold::euclidean(1).unwrap(),
        ])
        .unwrap()
    }

    fn pp(x: f64, y: f64) -> ProductPoint {
        ProductPoint::new(vec![
            FactorPoint::Euclidean(DVector::from_column_slice(&[x])),
            FactorPoint::Euclidean(DVector::from_column_slice(&[y])),
        ])
    }

    #[test]
    fn objective_single_datum() {
        let pm = flat2();
        let sample = WeightedSample::uniform(&pm, vec![pp(0.0, 0.0)]).unwrap();
        assert_eq!(objective(&pm, &sample, &pp(0.0, 0.0)).unwrap(), 0.0);
        let sample2 =
            WeightedSample::uniform(&pm, vec![pp(0.0, 0.0), pp(1.0, 0.0)]).unwrap();
        assert!((objective(&pm, &sample2, &pp(0.0, 0.0)).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn subgradient_single_datum_arithmetic() {
        // Datum (3,4) with weight 1 at z = (0,0): d = 5, so the components
        // are −3/5 and −4/5.
        let pm = flat2();
        let sample = WeightedSample::uniform(&pm, vec![pp(3.0, 4.0)]).unwrap();
        let xi = min_norm_subgradient(&pm, &sample, &pp(0.0, 0.0)).unwrap();
        match (xi.component(0), xi.component(1)) {
            (FactorTangent::Euclidean(a), FactorTangent::Euclidean(b)) => {
                assert!((a[0] + 0.6).abs() < 1e-15);
                assert!((b[0] + 0.8).abs() < 1e-15);
            }
            _ => panic!("unexpected tangent kinds"),
        }
    }

    #[test]
    fn subgradient_zero_at_coincident_datum() {
        let pm = flat2();
        let sample = WeightedSample::uniform(&pm, vec![pp(1.0, 2.0)]).unwrap();
        let xi = min_norm_subgradient(&pm, &sample, &pp(1.0, 2.0)).unwrap();
        assert_eq!(pm.norm(&pp(1.0, 2.0), &xi).unwrap(), 0.0);
    }

    #[test]
    fn weiszfeld_weights_arithmetic() {
        let pm = flat2();
        let sample =
            WeightedSample::uniform(&pm, vec![pp(1.0, 0.0), pp(3.0, 0.0)]).unwrap();
        let w = weiszfeld_weights(&pm, &sample, &pp(0.0, 0.0), 0.0).unwrap();
        assert!((w[0] - 0.75).abs() < 1e-15);
        assert!((w[1] - 0.25).abs() < 1e-15);
        assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn weiszfeld_weights_equal_distances_reproduce_weights() {
        let pm = flat2();
        let pts = vec![pp(1.0, 0.0), pp(-1.0, 0.0), pp(0.0, 1.0)];
        let sample =
            WeightedSample::new(&pm, pts, vec![0.5, 0.3, 0.2]).unwrap();
        let w = weiszfeld_weights(&pm, &sample, &pp(0.0, 0.0), 0.0).unwrap();
        assert!((w[0] - 0.5).abs() < 1e-15);
        assert!((w[1] - 0.3).abs() < 1e-15);
        assert!((w[2] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn weiszfeld_weights_scale_invariant() {
        // Scaling all the data (hence all distances) by c leaves the
        // adaptive weights unchanged.
        let pm = flat2();
        let pts = vec![pp(1.0, 0.5), pp(-2.0, 1.0), pp(0.5, -3.0)];
        let scaled: Vec<ProductPoint> = [4.0, -8.0, 2.0]
            .iter()
            .zip([2.0, 4.0, -12.0])
            .map(|(x, y)| pp(*x, y))
            .collect();
        let w = vec![0.2, 0.5, 0.3];
        let s1 = WeightedSample::new(&pm, pts, w.clone()).unwrap();
        let s2 = WeightedSample::new(&pm, scaled, w).unwrap();
        let w1 = weiszfeld_weights(&pm, &s1, &pp(0.0, 0.0), 0.0).unwrap();
        let w2 = weiszfeld_weights(&pm, &s2, &pp(0.0, 0.0), 0.0).unwrap();
        for (a, b) in w1.iter().zip(&w2) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn weiszfeld_weights_coincident_errors_without_epsilon() {
        let pm = flat2();
        let sample = WeightedSample::uniform(&pm, vec![pp(0.0, 0.0), pp(1.0, 1.0)]).unwrap();
        assert!(matches!(
            weiszfeld_weights(&pm, &sample, &pp(0.0, 0.0), 0.0),
            Err(Error::CoincidentIterate { index: 0 })
        ));
        assert!(weiszfeld_weights(&pm, &sample, &pp(0.0, 0.0), 1e-6).is_ok());
    }

    #[test]
    fn subgradient_converges_to_single_atom() {
        let pm = flat2();
        let sample = WeightedSample::uniform(&pm, vec![pp(2.0, -1.0)]).unwrap();
        let cfg = SolverConfig { method: SolverMethod::Subgradient, ..Default::default() };
        let report = subgradient_solve(&pm, &sample, &pp(5.0, 5.0), &cfg).unwrap();
        assert!(report.best_objective <= 1e-6);
        assert!(pm.dist(&report.minimizer, &pp(2.0, -1.0)).unwrap() <= 1e-6);
    }

    #[test]
    fn subgradient_unit_square_center() {
        let pm = flat2();
        let pts = vec![pp(0.0, 0.0), pp(1.0, 0.0), pp(0.0, 1.0), pp(1.0, 1.0)];
        let sample = WeightedSample::uniform(&pm, pts).unwrap();
        let cfg = SolverConfig { method: SolverMethod::Subgradient, ..Default::default() };
        let report = subgradient_solve(&pm, &sample, &pp(0.1, 0.9), &cfg).unwrap();
        let f_star = objective(&pm, &sample, &pp(0.5, 0.5)).unwrap();
        assert!(report.best_objective - f_star <= 1e-4, "gap {}", report.best_objective - f_star);
        assert!(pm.dist(&report.minimizer, &pp(0.5, 0.5)).unwrap() <= 1e-3);
    }

    #[test]
    fn best_so_far_trace_nonincreasing() {
        let pm = flat2();
        let pts = vec![pp(0.0, 0.0), pp(1.0, 0.0), pp(0.3, 0.9)];
        let sample = WeightedSample::uniform(&pm, pts).unwrap();
        let cfg = SolverConfig {
            method: SolverMethod::Subgradient,
            max_iters: 500,
            ..Default::default()
        };
        let report = subgradient_solve(&pm, &sample, &pp(2.0, 2.0), &cfg).unwrap();
        let mut best = f64::INFINITY;
        let mut mins = Vec::new();
        for &f in &report.objective_trace {
            best = best.min(f);
            mins.push(best);
        }
        assert!(mins.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(report.best_objective, *mins.last().unwrap());
        assert_eq!(report.objective_trace.len(), report.iterations_used);
        assert_eq!(report.residual_trace.len(), report.iterations_used);
    }

    #[test]
    fn weiszfeld_equilateral_triangle_centroid() {
        let pm = flat2();
        let h = 3f64.sqrt() / 2.0;
        let pts = vec![pp(0.0, 0.0), pp(1.0, 0.0), pp(0.5, h)];
        let sample = WeightedSample::uniform(&pm, pts).unwrap();
        let cfg = SolverConfig { method: SolverMethod::Weiszfeld, ..Default::default() };
        let report = weiszfeld_solve(&pm, &sample, &pp(0.9, 0.8), &cfg).unwrap();
        let centroid = pp(0.5, h / 3.0);
        assert!(pm.dist(&report.minimizer, &centroid).unwrap() <= 1e-7);
        let xi = min_norm_subgradient(&pm, &sample, &report.minimizer).unwrap();
        assert!(pm.norm(&report.minimizer, &xi).unwrap() <= 1e-8);
    }

    #[test]
    fn weiszfeld_majority_weight_returns_datum() {
        let pm = flat2();
        let pts = vec![pp(0.0, 0.0), pp(1.0, 1.0)];
        let sample = WeightedSample::new(&pm, pts, vec![0.6, 0.4]).unwrap();
        let cfg = SolverConfig { method: SolverMethod::Weiszfeld, ..Default::default() };
        let report = weiszfeld_solve(&pm, &sample, &pp(0.4, 0.4), &cfg).unwrap();
        assert_eq!(report.termination, Termination::AtDatum);
        assert_eq!(report.minimizer, pp(0.0, 0.0));
        // Ball condition: the smooth part has norm 0.4 ≤ 0.6.
        let xi = min_norm_subgradient(&pm, &sample, &report.minimizer).unwrap();
        assert!(pm.norm(&report.minimizer, &xi).unwrap() <= 0.6 + 1e-10);
    }

    #[test]
    fn first_order_residual_ball_absorption() {
        // A carries the majority weight: the pull of B (norm 0.4) is fully
        // absorbed by A's ball term (radius 0.6), so the residual at A is
        // zero while B, a non-optimal datum, keeps a positive residual.
        let pm = flat2();
        let pts = vec![pp(0.0, 0.0), pp(3.0, 4.0)];
        let sample = WeightedSample::new(&pm, pts.clone(), vec![0.6, 0.4]).unwrap();
        assert_eq!(first_order_residual(&pm, &sample, &pts[0]).unwrap(), 0.0);
        let at_b = first_order_residual(&pm, &sample, &pts[1]).unwrap();
        assert!((at_b - 0.2).abs() < 1e-12, "got {at_b}");
        // At a smooth point it coincides with the min-norm subgradient norm.
        let z = pp(1.0, 1.0);
        let xi = min_norm_subgradient(&pm, &sample, &z).unwrap();
        let n1 = pm.norm(&z, &xi).unwrap();
        let n2 = first_order_residual(&pm, &sample, &z).unwrap();
        assert!((n1 - n2).abs() < 1e-15);
    }

    #[test]
    fn weiszfeld_escapes_non_optimal_datum_start() {
        let pm = flat2();
        let pts = vec![pp(0.0, 0.0), pp(1.0, 0.0), pp(2.0, 0.0), pp(3.0, 0.0), pp(4.0, 0.0)];
        let sample = WeightedSample::uniform(&pm, pts.clone()).unwrap();
        let cfg = SolverConfig { method: SolverMethod::Weiszfeld, ..Default::default() };
        // Start exactly on the leftmost datum, which is not the median.
        let report = weiszfeld_solve(&pm, &sample, &pts[0], &cfg).unwrap();
        assert!(report
            .events
            .iter()
            .any(|e| matches!(e, SolverEvent::DatumEscape { .. })));
        // The median of 5 collinear equal-weight points is the middle one.
        assert!(pm.dist(&report.minimizer, &pts[2]).unwrap() <= 1e-7);
    }

    #[test]
    fn hybrid_single_atom_and_datum_init() {
        let pm = flat2();
        let atom = pp(2.0, 3.0);
        let sample = WeightedSample::uniform(&pm, vec![atom.clone()]).unwrap();
        let cfg = SolverConfig::default();
        let report = hybrid_solve(&pm, &sample, &atom, &cfg).unwrap();
        assert_eq!(report.termination, Termination::AtDatum);
        assert_eq!(report.minimizer, atom);
    }

    #[test]
    fn hybrid_matches_weiszfeld_on_smooth_instance() {
        let pm = flat2();
        let pts = vec![pp(0.0, 0.0), pp(1.0, 0.2), pp(0.3, 1.1), pp(-0.4, 0.5), pp(0.6, -0.7)];
        let sample = WeightedSample::uniform(&pm, pts).unwrap();
        let cfg = SolverConfig::default();
        let hybrid = hybrid_solve(&pm, &sample, &pp(3.0, -2.0), &cfg).unwrap();
        let wcfg = SolverConfig { method: SolverMethod::Weiszfeld, ..Default::default() };
        let weis = weiszfeld_solve(&pm, &sample, &pp(3.0, -2.0), &wcfg).unwrap();
        assert!(pm.dist(&hybrid.minimizer, &weis.minimizer).unwrap() <= 1e-7);
        assert!(hybrid
            .events
            .iter()
            .any(|e| matches!(e, SolverEvent::SwitchedToWeiszfeld { .. })));
    }

    #[test]
    fn weight_scaling_leaves_iterates_identical() {
        let pm = flat2();
        let pts = vec![pp(0.0, 0.0), pp(1.0, 0.4), pp(0.2, 0.9), pp(-0.5, 0.3)];
        let raw = vec![1.0, 2.0, 3.0, 2.0];
        let scaled: Vec<f64> = raw.iter().map(|w| w * 4.0).collect();
        let s1 = WeightedSample::from_unnormalized(&pm, pts.clone(), raw).unwrap();
        let s2 = WeightedSample::from_unnormalized(&pm, pts, scaled).unwrap();
        assert_eq!(s1.weights(), s2.weights());
        let cfg = SolverConfig { method: SolverMethod::Weiszfeld, max_iters: 60, ..Default::default() };
        let r1 = weiszfeld_solve(&pm, &s1, &pp(2.0, 2.0), &cfg).unwrap();
        let r2 = weiszfeld_solve(&pm, &s2, &pp(2.0, 2.0), &cfg).unwrap();
        assert_eq!(r1.objective_trace, r2.objective_trace);
        assert_eq!(r1.minimizer, r2.minimizer);
    }

    #[test]
    fn config_validation() {
        let cfg = SolverConfig { damping: 1.5, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = SolverConfig { max_iters: 0, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = SolverConfig { eta0: Some(-1.0), ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}

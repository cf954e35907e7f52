//! Solver cross-checks: the subgradient against central finite differences of
//! the objective, cross-method agreement, first-order residuals, and the
//! qualitative convergence-rate behavior.

use geomedian::linalg::{SpdMatrix, SymMatrix};
use geomedian::manifold::{FactorManifold, FactorPoint};
use geomedian::median::{
    first_order_residual, hybrid_solve, min_norm_subgradient, objective, subgradient_solve,
    weiszfeld_solve, SolverConfig, SolverMethod,
};
use geomedian::product::{ProductManifold, ProductPoint, WeightedSample};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn products() -> Vec<ProductManifold> {
    vec![
        ProductManifold::new(vec![
            FactorManifold::euclidean(2).unwrap(),
            FactorManifold::euclidean(1).unwrap(),
        ])
        .unwrap(),
        ProductManifold::new(vec![
            FactorManifold::euclidean(1).unwrap(),
            FactorManifold::sphere(3).unwrap(),
        ])
        .unwrap(),
        ProductManifold::new(vec![
            FactorManifold::euclidean(3).unwrap(),
            FactorManifold::spd_bures_wasserstein(3).unwrap(),
        ])
        .unwrap(),
    ]
}

/// A point with every component inside a moderate, geodesically convex
/// region: sphere components stay within 0.5 of the pole.
fn random_point(f: &FactorManifold, rng: &mut ChaCha8Rng) -> FactorPoint {
    match f {
        FactorManifold::Euclidean { dim } => {
            FactorPoint::Euclidean(DVector::from_fn(*dim, |_, _| rng.random_range(-1.0..1.0)))
        }
        FactorManifold::PositiveHalfLine => FactorPoint::Positive(rng.random_range(0.5..2.0)),
        FactorManifold::Sphere { dim } => {
            let mut pole = DVector::zeros(*dim);
            pole[*dim - 1] = 1.0;
            let raw = DVector::from_fn(*dim, |_, _| rng.random_range(-1.0..1.0));
            let mut t = &raw - &pole * pole.dot(&raw);
            let n = t.norm();
            if n > 1e-9 {
                t *= rng.random_range(0.05..0.5) / n;
            }
            let f = FactorManifold::sphere(*dim).unwrap();
            match f
                .exp(&FactorPoint::Sphere(pole.clone()), &geomedian::manifold::FactorTangent::Sphere(t))
                .unwrap()
            {
                FactorPoint::Sphere(v) => FactorPoint::Sphere(v),
                _ => unreachable!(),
            }
        }
        FactorManifold::SpdBuresWasserstein { dim, .. } => {
            let a = DMatrix::from_fn(*dim, *dim, |_, _| rng.random_range(-0.6..0.6));
            let m = &a * a.transpose() + DMatrix::identity(*dim, *dim) * 0.5;
            FactorPoint::Spd(SpdMatrix::new(SymMatrix::from_matrix(&m).unwrap()).unwrap())
        }
    }
}

fn random_instance(pm: &ProductManifold, n: usize, rng: &mut ChaCha8Rng) -> WeightedSample {
    let points: Vec<ProductPoint> = (0..n)
        .map(|_| ProductPoint::new(pm.factors().iter().map(|f| random_point(f, rng)).collect()))
        .collect();
    WeightedSample::uniform(pm, points).unwrap()
}

fn random_unit_tangent(
    pm: &ProductManifold,
    p: &ProductPoint,
    rng: &mut ChaCha8Rng,
) -> geomedian::product::ProductTangent {
    loop {
        let comps: Vec<_> = pm
            .factors()
            .iter()
            .zip(p.components())
            .map(|(f, c)| f.random_tangent(c, rng).unwrap())
            .collect();
        let t = geomedian::product::ProductTangent::new(comps);
        let n = pm.norm(p, &t).unwrap();
        if n > 1e-9 {
            return t.scaled(1.0 / n);
        }
    }
}

/// ⟨grad F, v⟩ against (F(exp(h·v)) − F(exp(−h·v))) / 2h.
#[test]
fn subgradient_matches_finite_differences() {
    let h = 1e-6;
    for (pi, pm) in products().into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + pi as u64);
        let sample = random_instance(&pm, 8, &mut rng);
        let mut checked = 0;
        while checked < 20 {
            let z = ProductPoint::new(
                pm.factors().iter().map(|f| random_point(f, &mut rng)).collect(),
            );
            let near_datum = sample
                .points()
                .iter()
                .any(|x| pm.dist(&z, x).unwrap() < 5e-2);
            if near_datum {
                continue;
            }
            let xi = min_norm_subgradient(&pm, &sample, &z).unwrap();
            for _ in 0..2 {
                let v = random_unit_tangent(&pm, &z, &mut rng);
                let plus = pm.exp(&z, &v.scaled(h)).unwrap();
                let minus = pm.exp(&z, &v.scaled(-h)).unwrap();
                let fd = (objective(&pm, &sample, &plus).unwrap()
                    - objective(&pm, &sample, &minus).unwrap())
                    / (2.0 * h);
                let analytic = pm.inner(&z, &xi, &v).unwrap();
                let err = (fd - analytic).abs() / fd.abs().max(1.0);
                assert!(
                    err <= 1e-5,
                    "product {pi}: fd {fd} vs analytic {analytic} (rel {err})"
                );
            }
            checked += 1;
        }
    }
}

#[test]
fn cross_solver_agreement_per_product() {
    for (pi, pm) in products().into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + pi as u64);
        for _ in 0..3 {
            let sample = random_instance(&pm, 8, &mut rng);
            let init = ProductPoint::new(
                pm.factors().iter().map(|f| random_point(f, &mut rng)).collect(),
            );
            let wcfg = SolverConfig {
                method: SolverMethod::Weiszfeld,
                ..Default::default()
            };
            let scfg = SolverConfig {
                method: SolverMethod::Subgradient,
                max_iters: 20_000,
                ..Default::default()
            };
            let w = weiszfeld_solve(&pm, &sample, &init, &wcfg).unwrap();
            let s = subgradient_solve(&pm, &sample, &init, &scfg).unwrap();
            let gap = (w.best_objective - s.best_objective).abs();
            assert!(gap <= 1e-5, "product {pi}: objective gap {gap}");
            let res = first_order_residual(&pm, &sample, &w.minimizer).unwrap();
            assert!(res <= 1e-8, "product {pi}: residual {res}");
        }
    }
}

#[test]
fn hybrid_from_datum_reaches_first_order_optimality() {
    let pm = ProductManifold::new(vec![
        FactorManifold::euclidean(2).unwrap(),
        FactorManifold::euclidean(1).unwrap(),
    ])
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let sample = random_instance(&pm, 9, &mut rng);
    // Initialize exactly on a datum that is not the median.
    let init = sample.points()[0].clone();
    let report = hybrid_solve(&pm, &sample, &init, &SolverConfig::default()).unwrap();
    let res = first_order_residual(&pm, &sample, &report.minimizer).unwrap();
    assert!(res <= 1e-8, "residual {res}, termination {:?}", report.termination);
}

#[test]
fn subgradient_gap_shrinks_sublinearly() {
    // Best-gap at 4K iterations is below the best-gap at K.
    let pm = ProductManifold::new(vec![
        FactorManifold::euclidean(2).unwrap(),
        FactorManifold::euclidean(1).unwrap(),
    ])
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let sample = random_instance(&pm, 10, &mut rng);
    let init = ProductPoint::new(
        pm.factors().iter().map(|f| random_point(f, &mut rng)).collect(),
    );
    let tight = SolverConfig {
        method: SolverMethod::Weiszfeld,
        tol_residual: 1e-12,
        ..Default::default()
    };
    let f_star = weiszfeld_solve(&pm, &sample, &init, &tight).unwrap().best_objective;
    let k = 250;
    let cfg = SolverConfig {
        method: SolverMethod::Subgradient,
        max_iters: 4 * k,
        tol_residual: 1e-15,
        tol_step: 1e-16,
        ..Default::default()
    };
    let report = subgradient_solve(&pm, &sample, &init, &cfg).unwrap();
    let best_at = |upto: usize| {
        report.objective_trace[..upto.min(report.objective_trace.len())]
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
            - f_star
    };
    let gap_k = best_at(k);
    let gap_4k = best_at(4 * k);
    assert!(
        gap_4k < gap_k,
        "gap at 4K = {gap_4k} not below gap at K = {gap_k}"
    );
}

#[test]
fn weiszfeld_local_linear_rate() {
    // Four corners of the unit square: the median is the center, distance
    // ~0.7 from every datum, so the fixed point is contractive.
    let pm = ProductManifold::new(vec![
        FactorManifold::euclidean(1).unwrap(),
        FactorManifold::euclidean(1).unwrap(),
    ])
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(700);
    let sample = random_instance(&pm, 12, &mut rng);
    let cfg = SolverConfig {
        method: SolverMethod::Weiszfeld,
        record_points: true,
        tol_residual: 1e-13,
        tol_step: 1e-16,
        ..Default::default()
    };
    let init = ProductPoint::new(
        pm.factors().iter().map(|f| random_point(f, &mut rng)).collect(),
    );
    let report = weiszfeld_solve(&pm, &sample, &init, &cfg).unwrap();
    // The median of this seeded instance is well separated from every datum.
    let sep = sample
        .points()
        .iter()
        .map(|p| pm.dist(&report.minimizer, p).unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!(sep >= 0.1, "median only {sep} from a datum");
    let trace = report.point_trace.as_ref().unwrap();
    assert!(trace.len() > 21, "converged too fast to measure the rate");
    let z_star = &report.minimizer;
    let start = trace.len() - 21;
    for w in trace[start..].windows(2) {
        let d0 = pm.dist(&w[0], z_star).unwrap();
        let d1 = pm.dist(&w[1], z_star).unwrap();
        if d0 > 1e-13 {
            let ratio = d1 / d0;
            assert!(ratio <= 0.95, "contraction ratio {ratio}");
        }
    }
}

#[test]
fn weiszfeld_bw_product_example() {
    let pm = ProductManifold::new(vec![
        FactorManifold::euclidean(3).unwrap(),
        FactorManifold::spd_bures_wasserstein(3).unwrap(),
    ])
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(600);
    let sample = random_instance(&pm, 6, &mut rng);
    let wcfg = SolverConfig {
        method: SolverMethod::Weiszfeld,
        ..Default::default()
    };
    let report = weiszfeld_solve(
        &pm,
        &sample,
        &geomedian::frechet::product_mean(&pm, &sample).unwrap(),
        &wcfg,
    )
    .unwrap();
    let xi = min_norm_subgradient(&pm, &sample, &report.minimizer).unwrap();
    assert!(pm.norm(&report.minimizer, &xi).unwrap() <= 1e-8);
    let scfg = SolverConfig {
        method: SolverMethod::Subgradient,
        max_iters: 20_000,
        ..Default::default()
    };
    let s = subgradient_solve(
        &pm,
        &sample,
        &geomedian::frechet::product_mean(&pm, &sample).unwrap(),
        &scfg,
    )
    .unwrap();
    assert!(report.best_objective <= s.best_objective + 1e-6);
}

//! Per-factor Fréchet means and their product composition.
//!
//! The squared-distance objective separates across factors, so the product
//! mean is computed factor by factor: closed-form weighted averages on flat
//! factors, tangent-space averaging on the sphere, and the fixed-point
//! barycenter iteration on the Bures–Wasserstein cone.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{SpdMatrix, SymMatrix};
use crate::manifold::{FactorManifold, FactorPoint};
use crate::product::{ProductManifold, ProductPoint, WeightedSample};

/// Tangent-mean norm below which the sphere iteration stops.
const SPHERE_MEAN_TOL: f64 = 1e-10;
/// Frobenius change below which the barycenter iteration stops.
const BURES_MEAN_TOL: f64 = 1e-10;
const MEAN_MAX_ITERS: usize = 1000;

/// Weighted Fréchet mean of points on a single factor.
pub fn factor_mean(f: &FactorManifold, points: &[FactorPoint], weights: &[f64]) -> Result<FactorPoint> {
    if points.is_empty() || points.len() != weights.len() {
        return Err(Error::ShapeError(format!(
            "{} points vs {} weights",
            points.len(),
            weights.len()
        )));
    }
    for p in points {
        f.validate_point(p)?;
    }
    match f {
        FactorManifold::Euclidean { dim } => {
            let mut acc = DVector::zeros(*dim);
            for (p, w) in points.iter().zip(weights) {
                if let FactorPoint::Euclidean(v) = p {
                    acc += v * *w;
                }
            }
            Ok(FactorPoint::Euclidean(acc))
        }
        FactorManifold::PositiveHalfLine => {
            let mut acc = 0.0;
            for (p, w) in points.iter().zip(weights) {
                if let FactorPoint::Positive(s) = p {
                    acc += s * w;
                }
            }
            Ok(FactorPoint::Positive(acc))
        }
        FactorManifold::Sphere { dim } => sphere_mean(f, *dim, points, weights),
        FactorManifold::SpdBuresWasserstein { .. } => bures_mean(points, weights),
    }
}

/// Componentwise product Fréchet mean of a weighted sample.
pub fn product_mean(pm: &ProductManifold, sample: &WeightedSample) -> Result<ProductPoint> {
    let n = sample.len();
    let weights = sample.weights();
    let mut components = Vec::with_capacity(pm.num_factors());
    for (i, f) in pm.factors().iter().enumerate() {
        let pts: Vec<FactorPoint> = (0..n)
            .map(|k| sample.points()[k].component(i).clone())
            .collect();
        components.push(factor_mean(f, &pts, weights).map_err(|e| e.at_factor(i))?);
    }
    Ok(ProductPoint::new(components))
}

/// Intrinsic sphere mean via iterated exp/log averaging. Initialized from the
/// normalized extrinsic average; a zero average falls back to the first point.
fn sphere_mean(
    f: &FactorManifold,
    dim: usize,
    points: &[FactorPoint],
    weights: &[f64],
) -> Result<FactorPoint> {
    let mut acc = DVector::zeros(dim);
    for (p, w) in points.iter().zip(weights) {
        if let FactorPoint::Sphere(v) = p {
            acc += v * *w;
        }
    }
    let mut mean = if acc.norm() > 1e-12 {
        FactorPoint::Sphere(&acc / acc.norm())
    } else {
        points[0].clone()
    };
    for _ in 0..MEAN_MAX_ITERS {
        let mut tangent = f.zero_tangent(&mean);
        for (p, w) in points.iter().zip(weights) {
            let t = f.log(&mean, p)?;
            tangent.add_scaled(&t, *w)?;
        }
        let norm = f.norm(&mean, &tangent)?;
        if norm <= SPHERE_MEAN_TOL {
            return Ok(mean);
        }
        mean = f.exp(&mean, &tangent)?;
    }
    Err(Error::NonConvergence {
        iterations: MEAN_MAX_ITERS,
        last: Box::new(mean),
    })
}

/// Bures–Wasserstein barycenter fixed point:
/// Σ ← Σ^{-1/2} (Σ_i w_i (Σ^{1/2} Σ_i Σ^{1/2})^{1/2})² Σ^{-1/2},
/// initialized at the Euclidean average of the inputs.
fn bures_mean(points: &[FactorPoint], weights: &[f64]) -> Result<FactorPoint> {
    let dim = match &points[0] {
        FactorPoint::Spd(m) => m.dim(),
        _ => return Err(Error::ShapeError("expected SPD points".into())),
    };
    let mut init = SymMatrix::zeros(dim);
    for (p, w) in points.iter().zip(weights) {
        if let FactorPoint::Spd(m) = p {
            init = init.add_scaled(m.sym(), *w)?;
        }
    }
    let mut sigma = SpdMatrix::new(init)?;
    for _ in 0..MEAN_MAX_ITERS {
        let (root, iroot) = crate::linalg::sqrt_invsqrt_spd(&sigma);
        let mut k = SymMatrix::zeros(dim);
        for (p, w) in points.iter().zip(weights) {
            if let FactorPoint::Spd(m) = p {
                let mid = SymMatrix::from_matrix(&(root.matrix() * m.matrix() * root.matrix()))?;
                let (mid_root, _) = crate::linalg::psd_sqrt(&mid);
                k = k.add_scaled(&mid_root, *w)?;
            }
        }
        let ksq = SymMatrix::from_matrix(&(k.matrix() * k.matrix()))?;
        let next = SymMatrix::from_matrix(&(iroot.matrix() * ksq.matrix() * iroot.matrix()))?;
        let change = (next.matrix() - sigma.matrix()).norm();
        sigma = SpdMatrix::new(next)?;
        if change <= BURES_MEAN_TOL {
            return Ok(FactorPoint::Spd(sigma));
        }
    }
    Err(Error::NonConvergence {
        iterations: MEAN_MAX_ITERS,
        last: Box::new(FactorPoint::Spd(sigma)),
    })
}

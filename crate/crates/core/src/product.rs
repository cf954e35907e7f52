//! Products of factor manifolds with the ℓ₂ product distance, componentwise
//! exponential/logarithmic maps, and the curvature/uniqueness diagnostics.

use crate::error::{Error, Result};
use crate::manifold::{FactorManifold, FactorPoint, FactorTangent, Radius};

/// Weight sums are accepted as "already normalized" when within this slack of
/// one; anything further off is rejected rather than silently rescaled.
pub const WEIGHT_SUM_SLACK: f64 = 1e-6;

/// An ordered product of k ≥ 1 factor manifolds. Factor order is part of the
/// identity of the product.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductManifold {
    factors: Vec<FactorManifold>,
}

/// A point of a product manifold: one component per factor.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductPoint {
    components: Vec<FactorPoint>,
}

/// A tangent vector of a product manifold: one component per factor, all
/// based at the same product point.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductTangent {
    components: Vec<FactorTangent>,
}

impl ProductManifold {
    pub fn new(factors: Vec<FactorManifold>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidInput("product needs at least one factor".into()));
        }
        Ok(ProductManifold { factors })
    }

    pub fn factors(&self) -> &[FactorManifold] {
        &self.factors
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn point(&self, components: Vec<FactorPoint>) -> Result<ProductPoint> {
        let p = ProductPoint { components };
        self.validate_point(&p)?;
        Ok(p)
    }

    pub fn validate_point(&self, p: &ProductPoint) -> Result<()> {
        if p.components.len() != self.factors.len() {
            return Err(Error::ShapeError(format!(
                "point has {} components, product has {} factors",
                p.components.len(),
                self.factors.len()
            )));
        }
        for (i, (f, c)) in self.factors.iter().zip(&p.components).enumerate() {
            f.validate_point(c).map_err(|e| e.at_factor(i))?;
        }
        Ok(())
    }

    pub fn validate_tangent(&self, p: &ProductPoint, v: &ProductTangent) -> Result<()> {
        if v.components.len() != self.factors.len() {
            return Err(Error::ShapeError(format!(
                "tangent has {} components, product has {} factors",
                v.components.len(),
                self.factors.len()
            )));
        }
        for (i, ((f, pc), vc)) in self
            .factors
            .iter()
            .zip(&p.components)
            .zip(&v.components)
            .enumerate()
        {
            f.validate_tangent(pc, vc).map_err(|e| e.at_factor(i))?;
        }
        Ok(())
    }

    /// Product distance: sqrt of the sum of squared factor distances.
    pub fn dist(&self, a: &ProductPoint, b: &ProductPoint) -> Result<f64> {
        self.check_arity(a)?;
        self.check_arity(b)?;
        let mut sq = 0.0;
        for (i, f) in self.factors.iter().enumerate() {
            let d = f
                .dist(&a.components[i], &b.components[i])
                .map_err(|e| e.at_factor(i))?;
            sq += d * d;
        }
        Ok(sq.sqrt())
    }

    /// Componentwise exponential map.
    pub fn exp(&self, p: &ProductPoint, v: &ProductTangent) -> Result<ProductPoint> {
        self.exp_flagged(p, v).map(|(q, _)| q)
    }

    /// Componentwise exponential map; also returns the indices of factors on
    /// which the half-line floor clamp fired.
    pub fn exp_flagged(&self, p: &ProductPoint, v: &ProductTangent) -> Result<(ProductPoint, Vec<usize>)> {
        self.check_arity(p)?;
        if v.components.len() != self.factors.len() {
            return Err(Error::ShapeError("tangent arity mismatch".into()));
        }
        let mut out = Vec::with_capacity(self.factors.len());
        let mut clamped = Vec::new();
        for (i, f) in self.factors.iter().enumerate() {
            let (q, flag) = f
                .exp_flagged(&p.components[i], &v.components[i])
                .map_err(|e| e.at_factor(i))?;
            if flag {
                clamped.push(i);
            }
            out.push(q);
        }
        Ok((ProductPoint { components: out }, clamped))
    }

    /// Componentwise logarithmic map.
    pub fn log(&self, p: &ProductPoint, x: &ProductPoint) -> Result<ProductTangent> {
        self.check_arity(p)?;
        self.check_arity(x)?;
        let mut out = Vec::with_capacity(self.factors.len());
        for (i, f) in self.factors.iter().enumerate() {
            out.push(
                f.log(&p.components[i], &x.components[i])
                    .map_err(|e| e.at_factor(i))?,
            );
        }
        Ok(ProductTangent { components: out })
    }

    /// Logarithm plus the joint distance, reusing per-factor decompositions.
    pub fn log_and_dist(&self, p: &ProductPoint, x: &ProductPoint) -> Result<(ProductTangent, f64)> {
        self.check_arity(p)?;
        self.check_arity(x)?;
        let mut out = Vec::with_capacity(self.factors.len());
        let mut sq = 0.0;
        for (i, f) in self.factors.iter().enumerate() {
            let (t, d) = f
                .log_and_dist(&p.components[i], &x.components[i])
                .map_err(|e| e.at_factor(i))?;
            sq += d * d;
            out.push(t);
        }
        Ok((ProductTangent { components: out }, sq.sqrt()))
    }

    /// Same as `log_and_dist` but resolving sphere-antipodal targets to a
    /// deterministic direction (solver-internal subgradient selection).
    pub(crate) fn log_and_dist_tie_break(
        &self,
        p: &ProductPoint,
        x: &ProductPoint,
    ) -> Result<(ProductTangent, f64)> {
        match self.log_and_dist(p, x) {
            Err(Error::AntipodalPoint) => {
                let mut out = Vec::with_capacity(self.factors.len());
                let mut sq = 0.0;
                for (i, f) in self.factors.iter().enumerate() {
                    let t = f
                        .log_or_tie_break(&p.components[i], &x.components[i])
                        .map_err(|e| e.at_factor(i))?;
                    let d = f.norm(&p.components[i], &t).map_err(|e| e.at_factor(i))?;
                    sq += d * d;
                    out.push(t);
                }
                Ok((ProductTangent { components: out }, sq.sqrt()))
            }
            other => other,
        }
    }

    /// Product metric: sum of factor inner products.
    pub fn inner(&self, p: &ProductPoint, u: &ProductTangent, v: &ProductTangent) -> Result<f64> {
        self.check_arity(p)?;
        let mut acc = 0.0;
        for (i, f) in self.factors.iter().enumerate() {
            acc += f
                .inner(&p.components[i], &u.components[i], &v.components[i])
                .map_err(|e| e.at_factor(i))?;
        }
        Ok(acc)
    }

    pub fn norm(&self, p: &ProductPoint, v: &ProductTangent) -> Result<f64> {
        Ok(self.inner(p, v, v)?.max(0.0).sqrt())
    }

    pub fn zero_tangent(&self, p: &ProductPoint) -> ProductTangent {
        ProductTangent {
            components: self
                .factors
                .iter()
                .zip(&p.components)
                .map(|(f, c)| f.zero_tangent(c))
                .collect(),
        }
    }

    /// Curvature upper bound of the product: the max over factor bounds.
    /// Errors if any factor has no configured bound.
    pub fn curvature_upper(&self) -> Result<f64> {
        let mut kappa = 0.0f64;
        for (i, f) in self.factors.iter().enumerate() {
            match f.curvature_upper() {
                Some(k) => kappa = kappa.max(k),
                None => return Err(Error::UnavailableCurvature { factor: i }),
            }
        }
        Ok(kappa)
    }

    /// Radius below which the geometric median of data in a ball around
    /// `center` is unique: the min of every factor injectivity radius at the
    /// corresponding component and π/(4√κ) for the product curvature bound κ.
    /// κ = 0 imposes no curvature constraint.
    pub fn uniqueness_radius(&self, center: &ProductPoint) -> Result<Radius> {
        self.check_arity(center)?;
        let kappa = self.curvature_upper()?;
        let mut r = Radius::Unbounded;
        for (f, c) in self.factors.iter().zip(&center.components) {
            r = r.min(f.injectivity_radius(c));
        }
        if kappa > 0.0 {
            r = r.min(Radius::Finite(
                std::f64::consts::PI / (4.0 * kappa.sqrt()),
            ));
        }
        Ok(r)
    }

    fn check_arity(&self, p: &ProductPoint) -> Result<()> {
        if p.components.len() != self.factors.len() {
            return Err(Error::ShapeError(format!(
                "point has {} components, product has {} factors",
                p.components.len(),
                self.factors.len()
            )));
        }
        Ok(())
    }
}

impl ProductPoint {
    pub fn new(components: Vec<FactorPoint>) -> Self {
        ProductPoint { components }
    }

    pub fn components(&self) -> &[FactorPoint] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &FactorPoint {
        &self.components[i]
    }

    pub fn into_components(self) -> Vec<FactorPoint> {
        self.components
    }
}

impl ProductTangent {
    pub fn new(components: Vec<FactorTangent>) -> Self {
        ProductTangent { components }
    }

    pub fn components(&self) -> &[FactorTangent] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &FactorTangent {
        &self.components[i]
    }

    pub fn scaled(&self, c: f64) -> ProductTangent {
        ProductTangent {
            components: self.components.iter().map(|t| t.scaled(c)).collect(),
        }
    }

    /// In-place `self += c·other`, componentwise.
    pub fn add_scaled(&mut self, other: &ProductTangent, c: f64) -> Result<()> {
        if self.components.len() != other.components.len() {
            return Err(Error::ShapeError("tangent arity mismatch".into()));
        }
        for (a, b) in self.components.iter_mut().zip(&other.components) {
            a.add_scaled(b, c)?;
        }
        Ok(())
    }
}

/// A weighted sample of product points. Weights are strictly positive and sum
/// to one after construction.
#[derive(Clone, Debug)]
pub struct WeightedSample {
    points: Vec<ProductPoint>,
    weights: Vec<f64>,
}

impl WeightedSample {
    /// Strict constructor: weights must already sum to one within
    /// `WEIGHT_SUM_SLACK` (file round-trip drift); the residual drift is
    /// renormalized away exactly.
    pub fn new(pm: &ProductManifold, points: Vec<ProductPoint>, weights: Vec<f64>) -> Result<Self> {
        let sum = Self::check_weights(&points, &weights)?;
        if (sum - 1.0).abs() > WEIGHT_SUM_SLACK {
            return Err(Error::InvalidInput(format!(
                "weights sum to {sum}, expected 1 within {WEIGHT_SUM_SLACK}"
            )));
        }
        Self::build(pm, points, weights, sum)
    }

    /// Normalizing constructor: weights may carry any positive total mass and
    /// are divided by their sum.
    pub fn from_unnormalized(
        pm: &ProductManifold,
        points: Vec<ProductPoint>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let sum = Self::check_weights(&points, &weights)?;
        Self::build(pm, points, weights, sum)
    }

    /// Uniform weights 1/n.
    pub fn uniform(pm: &ProductManifold, points: Vec<ProductPoint>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::InvalidInput("sample must be nonempty".into()));
        }
        let w = vec![1.0 / n as f64; n];
        Self::new(pm, points, w)
    }

    fn check_weights(points: &[ProductPoint], weights: &[f64]) -> Result<f64> {
        if points.is_empty() {
            return Err(Error::InvalidInput("sample must be nonempty".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::ShapeError(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        for w in weights {
            if !(w.is_finite() && *w > 0.0) {
                return Err(Error::InvalidInput(format!("weight {w} is not strictly positive")));
            }
        }
        Ok(kahan_sum(weights))
    }

    fn build(
        pm: &ProductManifold,
        points: Vec<ProductPoint>,
        mut weights: Vec<f64>,
        sum: f64,
    ) -> Result<Self> {
        for p in &points {
            pm.validate_point(p)?;
        }
        for w in &mut weights {
            *w /= sum;
        }
        debug_assert!((kahan_sum(&weights) - 1.0).abs() <= 1e-12);
        Ok(WeightedSample { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[ProductPoint] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ProductPoint, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

fn kahan_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for &x in xs {
        let y = x - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Whether a sample sits inside the ball on which the geometric median is
/// provably unique.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Contained,
    NotContained,
    /// No curvature bound was available for some factor.
    Inconclusive,
}

/// Diagnostic record for the uniqueness-ball hypothesis.
#[derive(Clone, Debug)]
pub struct BallContainmentReport {
    /// max_i d(center, x_i) over the sample.
    pub max_distance: f64,
    /// The uniqueness radius, when curvature bounds allowed computing one.
    pub radius: Option<Radius>,
    pub verdict: Verdict,
}

/// Compare the sample's spread around `center` against the uniqueness radius.
/// With no center supplied, the product Fréchet mean is used.
pub fn ball_containment_report(
    pm: &ProductManifold,
    sample: &WeightedSample,
    center: Option<&ProductPoint>,
) -> Result<BallContainmentReport> {
    let default_center;
    let center = match center {
        Some(c) => c,
        None => {
            default_center = crate::frechet::product_mean(pm, sample)?;
            &default_center
        }
    };
    let mut max_distance = 0.0f64;
    for p in sample.points() {
        max_distance = max_distance.max(pm.dist(center, p)?);
    }
    match pm.uniqueness_radius(center) {
        Ok(radius) => {
            let verdict = match radius {
                Radius::Unbounded => Verdict::Contained,
                Radius::Finite(r) => {
                    if max_distance < r {
                        Verdict::Contained
                    } else {
                        Verdict::NotContained
                    }
                }
            };
            Ok(BallContainmentReport {
                max_distance,
                radius: Some(radius),
                verdict,
            })
        }
        Err(Error::UnavailableCurvature { .. }) => Ok(BallContainmentReport {
            max_distance,
            radius: None,
            verdict: Verdict::Inconclusive,
        }),
        Err(e) => Err(e),
    }
}

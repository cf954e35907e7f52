//! Factor manifolds: distance, exponential/logarithmic maps, metric inner
//! product, curvature upper bounds, and injectivity radii for the four
//! supported geometries.
//!
//! Supported factors:
//! - `Euclidean(dim)` — flat ℝᵈ;
//! - `PositiveHalfLine` — σ > 0 with the flat metric, so d(σ₁, σ₂) = |σ₁ − σ₂|;
//! - `Sphere(dim)` — unit vectors in ℝᵈ with the round metric;
//! - `SpdBuresWasserstein(dim)` — SPD matrices under the Bures–Wasserstein
//!   (2-Wasserstein on centered Gaussians) geometry.

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{solve_lyapunov, sqrt_spd, SpdMatrix, SymMatrix};

/// Unit-norm tolerance for sphere points.
pub const SPHERE_NORM_TOL: f64 = 1e-10;
/// Threshold on ⟨p,x⟩ + 1 below which the sphere logarithm refuses to pick
/// a direction.
pub const ANTIPODAL_TOL: f64 = 1e-10;
/// Orthogonality tolerance for sphere tangents.
pub const SPHERE_TANGENT_TOL: f64 = 1e-10;
/// Positive half-line floor: exponential-map results are clamped here.
pub const HALF_LINE_FLOOR: f64 = 1e-9;

/// A radius that may be infinite (flat and SPD factors have no conjugate
/// points for the purposes of this crate).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Radius {
    Finite(f64),
    Unbounded,
}

impl Radius {
    pub fn min(self, other: Radius) -> Radius {
        match (self, other) {
            (Radius::Unbounded, r) | (r, Radius::Unbounded) => r,
            (Radius::Finite(a), Radius::Finite(b)) => Radius::Finite(a.min(b)),
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, Radius::Unbounded)
    }

    pub fn as_finite(&self) -> Option<f64> {
        match self {
            Radius::Finite(r) => Some(*r),
            Radius::Unbounded => None,
        }
    }
}

/// One factor of a product manifold.
#[derive(Clone, Debug, PartialEq)]
pub enum FactorManifold {
    Euclidean { dim: usize },
    PositiveHalfLine,
    Sphere { dim: usize },
    SpdBuresWasserstein { dim: usize, curvature_upper: Option<f64> },
}

/// A point on one factor, tagged by geometry kind.
#[derive(Clone, Debug, PartialEq)]
pub enum FactorPoint {
    Euclidean(DVector<f64>),
    Positive(f64),
    Sphere(DVector<f64>),
    Spd(SpdMatrix),
}

/// A tangent vector at some point of one factor.
///
/// Euclidean and half-line tangents are free vectors; sphere tangents must be
/// orthogonal to their base point; SPD tangents are symmetric matrices.
#[derive(Clone, Debug, PartialEq)]
pub enum FactorTangent {
    Euclidean(DVector<f64>),
    Positive(f64),
    Sphere(DVector<f64>),
    Sym(SymMatrix),
}

impl FactorManifold {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("Euclidean dimension must be positive".into()));
        }
        Ok(FactorManifold::Euclidean { dim })
    }

    pub fn positive_half_line() -> Self {
        FactorManifold::PositiveHalfLine
    }

    pub fn sphere(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidInput(
                "sphere ambient dimension must be at least 2".into(),
            ));
        }
        Ok(FactorManifold::Sphere { dim })
    }

    /// Bures–Wasserstein SPD factor with no configured curvature bound; the
    /// uniqueness diagnostics then report "inconclusive".
    pub fn spd_bures_wasserstein(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("SPD dimension must be positive".into()));
        }
        Ok(FactorManifold::SpdBuresWasserstein { dim, curvature_upper: None })
    }

    /// Same, with an externally supplied sectional-curvature upper bound used
    /// only by diagnostics.
    pub fn spd_bures_wasserstein_with_bound(dim: usize, kappa: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("SPD dimension must be positive".into()));
        }
        if !kappa.is_finite() || kappa < 0.0 {
            return Err(Error::InvalidInput("curvature bound must be nonnegative".into()));
        }
        Ok(FactorManifold::SpdBuresWasserstein { dim, curvature_upper: Some(kappa) })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            FactorManifold::Euclidean { .. } => "euclidean",
            FactorManifold::PositiveHalfLine => "positive",
            FactorManifold::Sphere { .. } => "sphere",
            FactorManifold::SpdBuresWasserstein { .. } => "spd_bw",
        }
    }

    /// Full membership check: kind, dimension, and the factor invariants.
    pub fn validate_point(&self, p: &FactorPoint) -> Result<()> {
        match (self, p) {
            (FactorManifold::Euclidean { dim }, FactorPoint::Euclidean(v)) => {
                if v.len() != *dim {
                    return Err(shape(format!("expected dim {dim}, got {}", v.len())));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidInput("non-finite coordinate".into()));
                }
                Ok(())
            }
            (FactorManifold::PositiveHalfLine, FactorPoint::Positive(s)) => {
                if !(s.is_finite() && *s > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "half-line coordinate must be positive, got {s}"
                    )));
                }
                Ok(())
            }
            (FactorManifold::Sphere { dim }, FactorPoint::Sphere(v)) => {
                if v.len() != *dim {
                    return Err(shape(format!("expected dim {dim}, got {}", v.len())));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidInput("non-finite coordinate".into()));
                }
                if (v.norm() - 1.0).abs() > SPHERE_NORM_TOL {
                    return Err(Error::InvalidInput(format!(
                        "sphere point norm {} not within {SPHERE_NORM_TOL} of 1",
                        v.norm()
                    )));
                }
                Ok(())
            }
            (FactorManifold::SpdBuresWasserstein { dim, .. }, FactorPoint::Spd(m)) => {
                if m.dim() != *dim {
                    return Err(shape(format!("expected dim {dim}, got {}", m.dim())));
                }
                Ok(())
            }
            _ => Err(shape(format!(
                "point kind does not match factor kind {}",
                self.kind_name()
            ))),
        }
    }

    /// Check that `v` is a valid tangent at `p` (kind, dimension, and for the
    /// sphere, orthogonality to the base point).
    pub fn validate_tangent(&self, p: &FactorPoint, v: &FactorTangent) -> Result<()> {
        self.validate_point(p)?;
        match (self, p, v) {
            (FactorManifold::Euclidean { dim }, _, FactorTangent::Euclidean(t)) => {
                if t.len() != *dim {
                    return Err(shape(format!("tangent dim {} != {dim}", t.len())));
                }
                Ok(())
            }
            (FactorManifold::PositiveHalfLine, _, FactorTangent::Positive(_)) => Ok(()),
            (FactorManifold::Sphere { dim }, FactorPoint::Sphere(b), FactorTangent::Sphere(t)) => {
                if t.len() != *dim {
                    return Err(shape(format!("tangent dim {} != {dim}", t.len())));
                }
                if b.dot(t).abs() > SPHERE_TANGENT_TOL * t.norm().max(1.0) {
                    return Err(Error::InvalidInput(
                        "sphere tangent not orthogonal to base point".into(),
                    ));
                }
                Ok(())
            }
            (FactorManifold::SpdBuresWasserstein { dim, .. }, _, FactorTangent::Sym(m)) => {
                if m.dim() != *dim {
                    return Err(shape(format!("tangent dim {} != {dim}", m.dim())));
                }
                Ok(())
            }
            _ => Err(shape(format!(
                "tangent kind does not match factor kind {}",
                self.kind_name()
            ))),
        }
    }

    /// Geodesic distance between two points on this factor.
    pub fn dist(&self, a: &FactorPoint, b: &FactorPoint) -> Result<f64> {
        match (self, a, b) {
            (FactorManifold::Euclidean { .. }, FactorPoint::Euclidean(x), FactorPoint::Euclidean(y)) => {
                check_len(x, y)?;
                Ok((x - y).norm())
            }
            (FactorManifold::PositiveHalfLine, FactorPoint::Positive(x), FactorPoint::Positive(y)) => {
                Ok((x - y).abs())
            }
            (FactorManifold::Sphere { .. }, FactorPoint::Sphere(x), FactorPoint::Sphere(y)) => {
                check_len(x, y)?;
                Ok(x.dot(y).clamp(-1.0, 1.0).acos())
            }
            (FactorManifold::SpdBuresWasserstein { .. }, FactorPoint::Spd(x), FactorPoint::Spd(y)) => {
                check_dim(x, y)?;
                // Canonical argument order keeps the computed value exactly
                // symmetric in (a, b).
                let (lo, hi) = if lex_le(x, y) { (x, y) } else { (y, x) };
                Ok(bures_dist(lo, hi))
            }
            _ => Err(shape(format!("point kinds do not match factor {}", self.kind_name()))),
        }
    }

    /// Exponential map at `p` with initial velocity `v`.
    pub fn exp(&self, p: &FactorPoint, v: &FactorTangent) -> Result<FactorPoint> {
        self.exp_flagged(p, v).map(|(q, _)| q)
    }

    /// Exponential map that also reports whether the half-line floor clamp
    /// fired, so solvers can record the event.
    pub fn exp_flagged(&self, p: &FactorPoint, v: &FactorTangent) -> Result<(FactorPoint, bool)> {
        match (self, p, v) {
            (FactorManifold::Euclidean { .. }, FactorPoint::Euclidean(x), FactorTangent::Euclidean(t)) => {
                check_len(x, t)?;
                Ok((FactorPoint::Euclidean(x + t), false))
            }
            (FactorManifold::PositiveHalfLine, FactorPoint::Positive(x), FactorTangent::Positive(t)) => {
                let raw = x + t;
                if raw < HALF_LINE_FLOOR {
                    Ok((FactorPoint::Positive(HALF_LINE_FLOOR), true))
                } else {
                    Ok((FactorPoint::Positive(raw), false))
                }
            }
            (FactorManifold::Sphere { .. }, FactorPoint::Sphere(x), FactorTangent::Sphere(t)) => {
                check_len(x, t)?;
                let theta = t.norm();
                if theta < 1e-14 {
                    return Ok((FactorPoint::Sphere(x.clone()), false));
                }
                let mut q = x * theta.cos() + t * (theta.sin() / theta);
                let n = q.norm();
                if n > 0.0 {
                    q /= n;
                }
                Ok((FactorPoint::Sphere(q), false))
            }
            (FactorManifold::SpdBuresWasserstein { .. }, FactorPoint::Spd(x), FactorTangent::Sym(t)) => {
                if x.dim() != t.dim() {
                    return Err(shape(format!("tangent dim {} != {}", t.dim(), x.dim())));
                }
                let l = solve_lyapunov(x, t)?;
                let lxl = SymMatrix::from_matrix(&(l.matrix() * x.matrix() * l.matrix()))?;
                let raw = x.sym().add_scaled(t, 1.0)?.add_scaled(&lxl, 1.0)?;
                match SpdMatrix::new(raw) {
                    Ok(q) => Ok((FactorPoint::Spd(q), false)),
                    Err(Error::NotSpd { .. }) => Err(Error::LeftManifold { factor: 0 }),
                    Err(e) => Err(e),
                }
            }
            _ => Err(shape(format!("kinds do not match factor {}", self.kind_name()))),
        }
    }

    /// Logarithmic map: the initial velocity of the minimizing geodesic from
    /// `p` to `x`. Errors with `AntipodalPoint` on the sphere when the
    /// geodesic direction is not determined.
    pub fn log(&self, p: &FactorPoint, x: &FactorPoint) -> Result<FactorTangent> {
        match (self, p, x) {
            (FactorManifold::Euclidean { .. }, FactorPoint::Euclidean(a), FactorPoint::Euclidean(b)) => {
                check_len(a, b)?;
                Ok(FactorTangent::Euclidean(b - a))
            }
            (FactorManifold::PositiveHalfLine, FactorPoint::Positive(a), FactorPoint::Positive(b)) => {
                Ok(FactorTangent::Positive(b - a))
            }
            (FactorManifold::Sphere { .. }, FactorPoint::Sphere(a), FactorPoint::Sphere(b)) => {
                check_len(a, b)?;
                let c = a.dot(b).clamp(-1.0, 1.0);
                if c <= -1.0 + ANTIPODAL_TOL {
                    return Err(Error::AntipodalPoint);
                }
                Ok(FactorTangent::Sphere(sphere_log_from_cos(a, b, c)))
            }
            (FactorManifold::SpdBuresWasserstein { .. }, FactorPoint::Spd(a), FactorPoint::Spd(b)) => {
                check_dim(a, b)?;
                Ok(FactorTangent::Sym(bures_log(a, b)))
            }
            _ => Err(shape(format!("kinds do not match factor {}", self.kind_name()))),
        }
    }

    /// Logarithm together with the geodesic distance, sharing intermediate
    /// decompositions where the geometry allows (Bures–Wasserstein needs one
    /// eigendecomposition for both).
    pub fn log_and_dist(&self, p: &FactorPoint, x: &FactorPoint) -> Result<(FactorTangent, f64)> {
        match (self, p, x) {
            (FactorManifold::SpdBuresWasserstein { .. }, FactorPoint::Spd(a), FactorPoint::Spd(b)) => {
                check_dim(a, b)?;
                let (log, d) = bures_log_and_dist(a, b);
                Ok((FactorTangent::Sym(log), d))
            }
            _ => {
                let t = self.log(p, x)?;
                let d = self.dist(p, x)?;
                Ok((t, d))
            }
        }
    }

    /// Like `log`, but on the sphere an antipodal target resolves to a
    /// deterministic direction instead of erroring. Used by solvers, where
    /// any measurable subgradient selection is valid.
    pub(crate) fn log_or_tie_break(&self, p: &FactorPoint, x: &FactorPoint) -> Result<FactorTangent> {
        match self.log(p, x) {
            Err(Error::AntipodalPoint) => {
                if let (FactorPoint::Sphere(a), FactorPoint::Sphere(b)) = (p, x) {
                    let c = a.dot(b).clamp(-1.0, 1.0);
                    let w = b - a * c;
                    if w.norm() >= 1e-12 {
                        return Ok(FactorTangent::Sphere(sphere_log_from_cos(a, b, c)));
                    }
                    // Exactly antipodal: pick the axis least aligned with p.
                    let k = (0..a.len())
                        .min_by(|&i, &j| a[i].abs().total_cmp(&a[j].abs()))
                        .unwrap_or(0);
                    let mut e = DVector::zeros(a.len());
                    e[k] = 1.0;
                    let t = &e - a * a[k];
                    let dir = &t / t.norm();
                    return Ok(FactorTangent::Sphere(dir * std::f64::consts::PI));
                }
                Err(Error::AntipodalPoint)
            }
            other => other,
        }
    }

    /// Riemannian inner product of two tangents at `p`.
    pub fn inner(&self, p: &FactorPoint, u: &FactorTangent, v: &FactorTangent) -> Result<f64> {
        match (self, p, u, v) {
            (FactorManifold::Euclidean { .. }, _, FactorTangent::Euclidean(a), FactorTangent::Euclidean(b)) => {
                check_len(a, b)?;
                Ok(a.dot(b))
            }
            (FactorManifold::PositiveHalfLine, _, FactorTangent::Positive(a), FactorTangent::Positive(b)) => {
                Ok(a * b)
            }
            (FactorManifold::Sphere { .. }, _, FactorTangent::Sphere(a), FactorTangent::Sphere(b)) => {
                check_len(a, b)?;
                Ok(a.dot(b))
            }
            (
                FactorManifold::SpdBuresWasserstein { .. },
                FactorPoint::Spd(s),
                FactorTangent::Sym(a),
                FactorTangent::Sym(b),
            ) => {
                if s.dim() != a.dim() || a.dim() != b.dim() {
                    return Err(shape("tangent dimensions do not match base".into()));
                }
                let l = solve_lyapunov(s, a)?;
                Ok(0.5 * (l.matrix() * b.matrix()).trace())
            }
            _ => Err(shape(format!("kinds do not match factor {}", self.kind_name()))),
        }
    }

    /// Metric norm of a tangent at `p`.
    pub fn norm(&self, p: &FactorPoint, v: &FactorTangent) -> Result<f64> {
        Ok(self.inner(p, v, v)?.max(0.0).sqrt())
    }

    /// Sectional-curvature upper bound, when one is known.
    ///
    /// `None` means "unavailable" (the Bures–Wasserstein factor by default);
    /// diagnostics that need a bound then report inconclusive results.
    pub fn curvature_upper(&self) -> Option<f64> {
        match self {
            FactorManifold::Euclidean { .. } | FactorManifold::PositiveHalfLine => Some(0.0),
            FactorManifold::Sphere { .. } => Some(1.0),
            FactorManifold::SpdBuresWasserstein { curvature_upper, .. } => *curvature_upper,
        }
    }

    /// Injectivity radius at `p`. The flat factors and the SPD cone (where
    /// the optimal-transport logarithm is globally single-valued) report
    /// `Unbounded`; the unit sphere reports π.
    pub fn injectivity_radius(&self, _p: &FactorPoint) -> Radius {
        match self {
            FactorManifold::Sphere { .. } => Radius::Finite(std::f64::consts::PI),
            _ => Radius::Unbounded,
        }
    }

    /// Zero tangent at `p`.
    pub fn zero_tangent(&self, p: &FactorPoint) -> FactorTangent {
        match (self, p) {
            (FactorManifold::Euclidean { dim }, _) => FactorTangent::Euclidean(DVector::zeros(*dim)),
            (FactorManifold::PositiveHalfLine, _) => FactorTangent::Positive(0.0),
            (FactorManifold::Sphere { dim }, _) => FactorTangent::Sphere(DVector::zeros(*dim)),
            (FactorManifold::SpdBuresWasserstein { dim, .. }, _) => {
                FactorTangent::Sym(SymMatrix::zeros(*dim))
            }
        }
    }

    /// A random tangent at `p` with independent standard-normal coordinates
    /// (projected to the tangent space on the sphere). Not normalized.
    pub fn random_tangent<R: Rng + ?Sized>(&self, p: &FactorPoint, rng: &mut R) -> Result<FactorTangent> {
        self.validate_point(p)?;
        Ok(match (self, p) {
            (FactorManifold::Euclidean { dim }, _) => {
                FactorTangent::Euclidean(DVector::from_fn(*dim, |_, _| standard_normal(rng)))
            }
            (FactorManifold::PositiveHalfLine, _) => FactorTangent::Positive(standard_normal(rng)),
            (FactorManifold::Sphere { dim }, FactorPoint::Sphere(b)) => {
                let raw = DVector::from_fn(*dim, |_, _| standard_normal(rng));
                let proj = &raw - b * b.dot(&raw);
                FactorTangent::Sphere(proj)
            }
            (FactorManifold::SpdBuresWasserstein { dim, .. }, _) => FactorTangent::Sym(
                SymMatrix::from_fn(*dim, |_, _| standard_normal(rng)).expect("finite draws"),
            ),
            _ => unreachable!("validate_point checked the kind"),
        })
    }
}

impl FactorTangent {
    pub fn scaled(&self, c: f64) -> FactorTangent {
        match self {
            FactorTangent::Euclidean(v) => FactorTangent::Euclidean(v * c),
            FactorTangent::Positive(v) => FactorTangent::Positive(v * c),
            FactorTangent::Sphere(v) => FactorTangent::Sphere(v * c),
            FactorTangent::Sym(m) => FactorTangent::Sym(m.scaled(c)),
        }
    }

    /// In-place `self += c·other`. The kinds and dimensions must match.
    pub fn add_scaled(&mut self, other: &FactorTangent, c: f64) -> Result<()> {
        match (self, other) {
            (FactorTangent::Euclidean(a), FactorTangent::Euclidean(b)) => {
                check_len(a, b)?;
                *a += b * c;
                Ok(())
            }
            (FactorTangent::Positive(a), FactorTangent::Positive(b)) => {
                *a += b * c;
                Ok(())
            }
            (FactorTangent::Sphere(a), FactorTangent::Sphere(b)) => {
                check_len(a, b)?;
                *a += b * c;
                Ok(())
            }
            (FactorTangent::Sym(a), FactorTangent::Sym(b)) => {
                *a = a.add_scaled(b, c)?;
                Ok(())
            }
            _ => Err(shape("tangent kinds do not match".into())),
        }
    }
}

fn shape(msg: String) -> Error {
    Error::ShapeError(msg)
}

fn check_len(a: &DVector<f64>, b: &DVector<f64>) -> Result<()> {
    if a.len() != b.len() {
        return Err(shape(format!("length mismatch: {} vs {}", a.len(), b.len())));
    }
    Ok(())
}

fn check_dim(a: &SpdMatrix, b: &SpdMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(shape(format!("dimension mismatch: {} vs {}", a.dim(), b.dim())));
    }
    Ok(())
}

fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

/// Lexicographic order on the entry storage, used to canonicalize argument
/// order so the Bures–Wasserstein distance is exactly symmetric as computed.
fn lex_le(a: &SpdMatrix, b: &SpdMatrix) -> bool {
    for (x, y) in a.matrix().iter().zip(b.matrix().iter()) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    true
}

fn sphere_log_from_cos(a: &DVector<f64>, b: &DVector<f64>, c: f64) -> DVector<f64> {
    let theta = c.acos();
    let w = b - a * c;
    let wn = w.norm();
    if wn < 1e-16 || theta < 1e-16 {
        return DVector::zeros(a.len());
    }
    w * (theta / wn)
}

/// d(Σ₁, Σ₂)² = tr(Σ₁) + tr(Σ₂) − 2·tr((Σ₂^{1/2} Σ₁ Σ₂^{1/2})^{1/2}).
fn bures_dist(s1: &SpdMatrix, s2: &SpdMatrix) -> f64 {
    let r2 = sqrt_spd(s2);
    let inner = SymMatrix::from_matrix(&(r2.matrix() * s1.matrix() * r2.matrix()))
        .expect("SPD product is finite");
    let (_, cross) = crate::linalg::psd_sqrt(&inner);
    (s1.trace() + s2.trace() - 2.0 * cross).max(0.0).sqrt()
}

/// Optimal-transport map route: T = Σ₁^{-1/2} (Σ₁^{1/2} Σ₂ Σ₁^{1/2})^{1/2} Σ₁^{-1/2},
/// log_{Σ₁}(Σ₂) = TΣ₁ + Σ₁T − 2Σ₁.
fn bures_log(base: &SpdMatrix, target: &SpdMatrix) -> SymMatrix {
    bures_log_and_dist(base, target).0
}

fn bures_log_and_dist(base: &SpdMatrix, target: &SpdMatrix) -> (SymMatrix, f64) {
    let (r, ri) = crate::linalg::sqrt_invsqrt_spd(base);
    let mid = SymMatrix::from_matrix(&(r.matrix() * target.matrix() * r.matrix()))
        .expect("SPD product is finite");
    let (mid_sqrt, cross) = crate::linalg::psd_sqrt(&mid);
    let t_map = SymMatrix::from_matrix(&(ri.matrix() * mid_sqrt.matrix() * ri.matrix()))
        .expect("finite");
    let log = SymMatrix::from_matrix(
        &(t_map.matrix() * base.matrix() + base.matrix() * t_map.matrix() - 2.0 * base.matrix()),
    )
    .expect("finite");
    let d2 = (base.trace() + target.trace() - 2.0 * cross).max(0.0);
    (log, d2.sqrt())
}

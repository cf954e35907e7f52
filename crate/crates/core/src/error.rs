use thiserror::Error;

use crate::manifold::FactorPoint;

/// Errors shared by the geometry, solver, and experiment layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The matrix failed the strict positive-definiteness guard.
    #[error("matrix is not SPD (min eigenvalue {min_eigenvalue:e}, threshold {threshold:e})")]
    NotSpd { min_eigenvalue: f64, threshold: f64 },

    #[error("shape mismatch: {0}")]
    ShapeError(String),

    /// Sphere logarithm at (numerically) antipodal points is multivalued.
    #[error("antipodal points: sphere logarithm is undefined")]
    AntipodalPoint,

    /// An exponential-map step produced a point outside the factor manifold
    /// (only possible on the SPD cone, for oversized tangents).
    #[error("exponential map left the manifold on factor {factor}")]
    LeftManifold { factor: usize },

    /// A Weiszfeld weight update hit a zero distance with no regularization.
    #[error("iterate coincides with datum {index} and epsilon = 0")]
    CoincidentIterate { index: usize },

    /// A curvature upper bound was requested but not configured for a factor.
    #[error("curvature bound unavailable for factor {factor}")]
    UnavailableCurvature { factor: usize },

    /// A fixed-point iteration hit its cap; the last iterate is attached.
    #[error("iteration did not converge after {iterations} iterations")]
    NonConvergence {
        iterations: usize,
        last: Box<FactorPoint>,
    },
}

impl Error {
    /// Re-tag a factor-level error with the index of the factor inside a
    /// product, so callers see which component failed.
    pub(crate) fn at_factor(self, index: usize) -> Error {
        match self {
            Error::LeftManifold { .. } => Error::LeftManifold { factor: index },
            Error::UnavailableCurvature { .. } => Error::UnavailableCurvature { factor: index },
            Error::ShapeError(msg) => Error::ShapeError(format!("factor {index}: {msg}")),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

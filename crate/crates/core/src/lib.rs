//! Geometric medians and Fréchet means of weighted samples on product
//! Riemannian manifolds.
//!
//! The crate is organized bottom-up:
//!
//! - [`linalg`]: dense symmetric eigendecompositions, SPD square roots, and
//!   Lyapunov solves;
//! - [`manifold`]: the four supported factor geometries (Euclidean space,
//!   the positive half-line, the unit sphere, and SPD matrices under the
//!   Bures–Wasserstein metric);
//! - [`product`]: k-ary products with the ℓ₂ product distance, weighted
//!   samples, and curvature/uniqueness diagnostics;
//! - [`frechet`]: per-factor Fréchet means (the separable estimator);
//! - [`median`]: the coupled median objective, its subdifferential, and the
//!   subgradient / Weiszfeld / hybrid solvers;
//! - [`lab`]: seeded contamination experiments, breakdown and perturbation
//!   probes.

pub mod error;
pub mod frechet;
pub mod lab;
pub mod linalg;
pub mod manifold;
pub mod median;
pub mod product;

pub use error::{Error, Result};
pub use frechet::{factor_mean, product_mean};
pub use linalg::{solve_lyapunov, sqrt_spd, sym_eig, SpdMatrix, SymMatrix};
pub use manifold::{FactorManifold, FactorPoint, FactorTangent, Radius};
pub use median::{
    first_order_residual, hybrid_solve, min_norm_subgradient, objective, solve, subgradient_solve,
    weiszfeld_solve, weiszfeld_weights, SolverConfig, SolverMethod, SolverReport, Termination,
};
pub use product::{
    ball_containment_report, BallContainmentReport, ProductManifold, ProductPoint, ProductTangent,
    Verdict, WeightedSample,
};

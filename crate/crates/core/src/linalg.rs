//! Small dense symmetric linear algebra: symmetric eigendecomposition, SPD
//! square roots, and Lyapunov solves. These back the Bures–Wasserstein factor.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative eigenvalue floor below which a matrix is rejected as not SPD.
pub const SPD_TOLERANCE: f64 = 1e-12;

/// Relative Frobenius residual allowed for eigendecomposition-based results.
pub const EIG_TOLERANCE: f64 = 1e-10;

/// A square real matrix with exactly symmetric storage.
///
/// Symmetry is enforced on construction: off-diagonal pairs are averaged once
/// and the same value is stored on both sides, so `entries[i][j] == entries[j][i]`
/// holds bitwise for every instance.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    /// Symmetrize an arbitrary square matrix: (M + Mᵀ)/2 with exact mirroring.
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::ShapeError(format!(
                "expected square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidInput("empty matrix".into()));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        let n = m.nrows();
        let mut s = DMatrix::zeros(n, n);
        for i in 0..n {
            s[(i, i)] = m[(i, i)];
            for j in 0..i {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        Ok(SymMatrix { m: s })
    }

    /// Build from the lower triangle of `f(i, j)` (called once per `i >= j`).
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        let mut s = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..=i {
                let v = f(i, j);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        if s.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        Ok(SymMatrix { m: s })
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymMatrix {
            m: DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn scaled(&self, c: f64) -> SymMatrix {
        SymMatrix { m: &self.m * c }
    }

    /// Entrywise a + c·b; exact symmetry is preserved by construction.
    pub fn add_scaled(&self, other: &SymMatrix, c: f64) -> Result<SymMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::ShapeError(format!(
                "dimension mismatch: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(SymMatrix {
            m: &self.m + &other.m * c,
        })
    }
}

/// A symmetric matrix whose eigenvalues all clear the relative SPD guard.
#[derive(Clone, Debug, PartialEq)]
pub struct SpdMatrix {
    s: SymMatrix,
}

impl SpdMatrix {
    /// Validate positive definiteness: the smallest eigenvalue must exceed
    /// `SPD_TOLERANCE` times the largest.
    pub fn new(s: SymMatrix) -> Result<Self> {
        let (vals, _) = sym_eig(&s);
        let min = vals[0];
        let max = vals[vals.len() - 1];
        let threshold = SPD_TOLERANCE * max.abs().max(f64::MIN_POSITIVE);
        if !min.is_finite() || min <= threshold {
            return Err(Error::NotSpd {
                min_eigenvalue: min,
                threshold,
            });
        }
        Ok(SpdMatrix { s })
    }

    pub fn identity(dim: usize) -> Self {
        SpdMatrix {
            s: SymMatrix::identity(dim),
        }
    }

    /// Diagonal SPD matrix; all entries must be strictly positive.
    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        SpdMatrix::new(SymMatrix::from_diagonal(diag))
    }

    pub fn dim(&self) -> usize {
        self.s.dim()
    }

    pub fn sym(&self) -> &SymMatrix {
        &self.s
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        self.s.matrix()
    }

    pub fn trace(&self) -> f64 {
        self.s.trace()
    }
}

/// Symmetric eigendecomposition S = Q·diag(λ)·Qᵀ with eigenvalues ascending.
///
/// Deterministic for a fixed input. The reconstruction residual is within
/// `EIG_TOLERANCE` of ‖S‖_F for the dimensions this crate targets.
pub fn sym_eig(s: &SymMatrix) -> (DVector<f64>, DMatrix<f64>) {
    let eig = s.m.clone().symmetric_eigen();
    let n = s.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Apply `f` to the eigenvalues of `s` and reassemble Q·diag(f(λ))·Qᵀ.
fn eig_map(s: &SymMatrix, f: impl Fn(f64) -> f64) -> Result<SymMatrix> {
    let (vals, q) = sym_eig(s);
    let mapped = DVector::from_iterator(vals.len(), vals.iter().map(|&l| f(l)));
    let m = &q * DMatrix::from_diagonal(&mapped) * q.transpose();
    SymMatrix::from_matrix(&m)
}

/// Principal square root of an SPD matrix: R·R == S within `EIG_TOLERANCE`.
pub fn sqrt_spd(s: &SpdMatrix) -> SpdMatrix {
    // Eigenvalues already cleared the SPD guard, so sqrt and the rebuild
    // cannot fail; a tiny negative rounding artifact is clipped to zero.
    let sym = eig_map(s.sym(), |l| l.max(0.0).sqrt()).expect("finite spectrum");
    SpdMatrix { s: sym }
}

/// Inverse principal square root of an SPD matrix.
pub fn invsqrt_spd(s: &SpdMatrix) -> SpdMatrix {
    let sym = eig_map(s.sym(), |l| 1.0 / l.max(f64::MIN_POSITIVE).sqrt()).expect("finite spectrum");
    SpdMatrix { s: sym }
}

/// Square root and inverse square root from a single eigendecomposition.
pub fn sqrt_invsqrt_spd(s: &SpdMatrix) -> (SpdMatrix, SpdMatrix) {
    let (vals, q) = sym_eig(s.sym());
    let n = vals.len();
    let roots = DVector::from_iterator(n, vals.iter().map(|l| l.max(f64::MIN_POSITIVE).sqrt()));
    let inv_roots = DVector::from_iterator(n, roots.iter().map(|r| 1.0 / r));
    let sq = &q * DMatrix::from_diagonal(&roots) * q.transpose();
    let isq = &q * DMatrix::from_diagonal(&inv_roots) * q.transpose();
    (
        SpdMatrix { s: SymMatrix::from_matrix(&sq).expect("finite spectrum") },
        SpdMatrix { s: SymMatrix::from_matrix(&isq).expect("finite spectrum") },
    )
}

/// Square root of a symmetric positive *semi*definite matrix, with tiny
/// negative rounding eigenvalues clipped to zero. Returns the root and its
/// trace (one eigendecomposition for both).
pub(crate) fn psd_sqrt(s: &SymMatrix) -> (SymMatrix, f64) {
    let (vals, q) = sym_eig(s);
    let n = vals.len();
    let roots = DVector::from_iterator(n, vals.iter().map(|l| l.max(0.0).sqrt()));
    let trace = roots.iter().sum();
    let m = &q * DMatrix::from_diagonal(&roots) * q.transpose();
    (SymMatrix::from_matrix(&m).expect("finite spectrum"), trace)
}

/// Solve L·S + S·L = V for symmetric L, with S SPD.
///
/// Computed in the eigenbasis of S: L'_{ij} = V'_{ij} / (λ_i + λ_j).
pub fn solve_lyapunov(s: &SpdMatrix, v: &SymMatrix) -> Result<SymMatrix> {
    if s.dim() != v.dim() {
        return Err(Error::ShapeError(format!(
            "dimension mismatch: {} vs {}",
            s.dim(),
            v.dim()
        )));
    }
    let (vals, q) = sym_eig(s.sym());
    let vp = q.transpose() * v.matrix() * &q;
    let n = s.dim();
    let mut lp = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            lp[(i, j)] = vp[(i, j)] / (vals[i] + vals[j]);
        }
    }
    SymMatrix::from_matrix(&(&q * lp * q.transpose()))
}

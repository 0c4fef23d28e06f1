//! Sparse and dense linear algebra kernels: CSR storage, sparse SPD
//! factorization, dense symmetric and generalized eigendecomposition,
//! and rank-revealing orthonormalization.

pub mod cholesky;
pub mod dense;
pub mod eig;
pub mod sparse;

pub use cholesky::{factor_spd, factor_spd_with_perm, sparse_solve_spd, SpdFactor};
pub use dense::{axpy, dot, factor_sym_indefinite, norm2, DenseMat, LdltFactor};
pub use eig::{eig_sym, eig_sym_generalized, fix_column_signs, orthonormalize_cols};
pub use sparse::{rcm_ordering, CsrMatrix, SparseSym};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("index {index} out of range for dimension {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("matrix is not positive definite (nonpositive pivot at {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("matrix is not symmetric")]
    NonSymmetric,
    #[error("mass matrix is numerically zero")]
    ZeroMassSpace,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Build a symmetric sparse matrix from triplets; duplicates are summed and
/// entries with row > col fold onto the upper triangle.
pub fn csr_from_triplets(
    n: usize,
    triplets: &[(usize, usize, f64)],
) -> Result<SparseSym, LinalgError> {
    SparseSym::from_triplets(n, triplets)
}

/// Solve a symmetric (possibly indefinite) system. Backed by a dense
/// Bunch–Kaufman LDLᵀ, which is adequate at the problem sizes this crate
/// targets; saddle-point blocks with zero diagonals are handled by the
/// 2x2 pivoting.
pub fn sparse_solve_sym_indefinite(
    k: &SparseSym,
    b: &[f64],
) -> Result<Vec<f64>, LinalgError> {
    let dense = k.to_dense();
    let f = factor_sym_indefinite(&dense)?;
    Ok(f.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indefinite_permutation_system() {
        let k = SparseSym::from_triplets(2, &[(0, 1, 1.0)]).unwrap();
        let x = sparse_solve_sym_indefinite(&k, &[1.0, 1.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14);
        assert!((x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn indefinite_singular_zero_row() {
        let k = SparseSym::from_triplets(3, &[(0, 0, 1.0), (0, 1, 2.0), (1, 1, -1.0)]).unwrap();
        assert!(matches!(
            sparse_solve_sym_indefinite(&k, &[1.0, 0.0, 0.0]),
            Err(LinalgError::SingularMatrix)
        ));
    }
}

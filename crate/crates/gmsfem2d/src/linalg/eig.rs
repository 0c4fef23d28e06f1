//! Dense symmetric eigensolvers: cyclic Jacobi for the standard problem,
//! a rank-filtered reduction for the generalized pencil A v = λ S v, and a
//! one-sided Jacobi orthonormalization for rank-revealing column bases.

use super::dense::{dot, DenseMat};
use super::LinalgError;

/// Relative off-diagonal Frobenius threshold for Jacobi convergence.
const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a symmetric matrix. Returns eigenvalues in
/// ascending order and the matching orthonormal eigenvectors as columns.
pub fn eig_sym(a: &DenseMat) -> Result<(Vec<f64>, DenseMat), LinalgError> {
    if !a.is_symmetric(1e-12) {
        return Err(LinalgError::NonSymmetric);
    }
    let n = a.rows();
    if n == 0 {
        return Ok((Vec::new(), DenseMat::zeros(0, 0)));
    }
    let mut b = a.clone();
    // symmetrize exactly so rotations keep both halves consistent
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (b.get(i, j) + b.get(j, i));
            b.set(i, j, v);
            b.set(j, i, v);
        }
    }
    let mut v = DenseMat::identity(n);
    let norm = b.frob_norm().max(1e-300);

    for _sweep in 0..MAX_SWEEPS {
        let mut off2 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let x = b.get(i, j);
                off2 += 2.0 * x * x;
            }
        }
        if off2.sqrt() <= JACOBI_TOL * norm {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = b.get(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = b.get(p, p);
                let aqq = b.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // rows/cols p and q of B
                for k in 0..n {
                    let bkp = b.get(k, p);
                    let bkq = b.get(k, q);
                    b.set(k, p, c * bkp - s * bkq);
                    b.set(k, q, s * bkp + c * bkq);
                }
                for k in 0..n {
                    let bpk = b.get(p, k);
                    let bqk = b.get(q, k);
                    b.set(p, k, c * bpk - s * bqk);
                    b.set(q, k, s * bpk + c * bqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| b.get(i, i).partial_cmp(&b.get(j, j)).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| b.get(i, i)).collect();
    let mut vectors = DenseMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_col(dst, v.col(src));
    }
    fix_column_signs(&mut vectors);
    Ok((values, vectors))
}

/// Deterministic sign convention: the largest-magnitude entry of each column
/// is made positive; ties resolve to the lowest index.
pub fn fix_column_signs(m: &mut DenseMat) {
    for j in 0..m.cols() {
        let col = m.col(j);
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for (i, &x) in col.iter().enumerate() {
            if x.abs() > best_abs {
                best_abs = x.abs();
                best = i;
            }
        }
        if col[best] < 0.0 {
            for x in m.col_mut(j) {
                *x = -*x;
            }
        }
    }
}

/// Generalized symmetric eigenproblem A v = λ S v with S positive
/// semidefinite. The pencil is reduced on the numerical range of S:
/// S = U Σ Uᵀ, modes with σ ≤ rank_tol·σ_max are discarded, and the
/// remaining problem is solved in whitened coordinates. Returned vectors
/// satisfy VᵀSV = I on the retained subspace; eigenvalues ascend.
pub fn eig_sym_generalized(
    a: &DenseMat,
    s: &DenseMat,
    rank_tol: f64,
) -> Result<(Vec<f64>, DenseMat), LinalgError> {
    if a.rows() != s.rows() || a.cols() != s.cols() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.rows(),
            got: s.rows(),
        });
    }
    if !a.is_symmetric(1e-12) || !s.is_symmetric(1e-12) {
        return Err(LinalgError::NonSymmetric);
    }
    let n = a.rows();
    let (sigma, u) = eig_sym(s)?;
    let sigma_max = sigma.iter().fold(0.0f64, |m, &x| m.max(x));
    if sigma_max <= 0.0 {
        return Err(LinalgError::ZeroMassSpace);
    }
    let keep: Vec<usize> = (0..n)
        .filter(|&i| sigma[i] > rank_tol * sigma_max && sigma[i] > 0.0)
        .collect();
    if keep.is_empty() {
        return Err(LinalgError::ZeroMassSpace);
    }
    // whitening map W = U_r Σ_r^{-1/2}
    let r = keep.len();
    let mut w = DenseMat::zeros(n, r);
    for (dst, &src) in keep.iter().enumerate() {
        let scale = 1.0 / sigma[src].sqrt();
        let ucol = u.col(src);
        let wcol = w.col_mut(dst);
        for i in 0..n {
            wcol[i] = ucol[i] * scale;
        }
    }
    let t = w.tr_matmul(&a.matmul(&w)); // Wᵀ A W, symmetric
    let (values, z) = eig_sym(&t)?;
    let mut vectors = w.matmul(&z);
    fix_column_signs(&mut vectors);
    Ok((values, vectors))
}

/// One-sided Jacobi orthonormalization. Returns an orthonormal basis of the
/// singular directions of `m` with singular value above `tol·σ_max`, plus the
/// retained rank. The span of the returned basis equals the span of `m`
/// truncated at that threshold.
pub fn orthonormalize_cols(m: &DenseMat, tol: f64) -> (DenseMat, usize) {
    let rows = m.rows();
    let cols = m.cols();
    if rows == 0 || cols == 0 {
        return (DenseMat::zeros(rows, 0), 0);
    }
    let mut w = m.clone();
    // Hestenes sweeps: right-rotations leave the column span unchanged
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let app = dot(w.col(p), w.col(p));
                let aqq = dot(w.col(q), w.col(q));
                let apq = dot(w.col(p), w.col(q));
                if apq.abs() <= 1e-15 * (app * aqq).sqrt().max(1e-300) {
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..rows {
                    let wip = w.get(i, p);
                    let wiq = w.get(i, q);
                    w.set(i, p, c * wip - s * wiq);
                    w.set(i, q, s * wip + c * wiq);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut norms: Vec<(usize, f64)> = (0..cols)
        .map(|j| (j, dot(w.col(j), w.col(j)).sqrt()))
        .collect();
    norms.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let sigma_max = norms[0].1;
    if sigma_max <= 0.0 {
        return (DenseMat::zeros(rows, 0), 0);
    }
    let rank = norms.iter().take_while(|&&(_, s)| s > tol * sigma_max).count();
    let mut q = DenseMat::zeros(rows, rank);
    for (dst, &(src, sigma)) in norms.iter().take(rank).enumerate() {
        let wcol = w.col(src);
        let qcol = q.col_mut(dst);
        for i in 0..rows {
            qcol[i] = wcol[i] / sigma;
        }
    }
    fix_column_signs(&mut q);
    (q, rank)
}

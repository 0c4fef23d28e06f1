//! Sparse LDLᵀ factorization for symmetric positive definite systems,
//! up-looking over the elimination tree, with reverse Cuthill–McKee
//! ordering applied by default.

use super::sparse::{rcm_ordering, SparseSym};
use super::LinalgError;

/// Numeric factor of P A Pᵀ = L D Lᵀ with unit lower-triangular L.
pub struct SpdFactor {
    n: usize,
    perm: Vec<usize>, // new = perm[old]
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

/// Column-compressed upper triangle (row indices ascending within a column).
struct UpperCsc {
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

fn to_upper_csc(a: &SparseSym) -> UpperCsc {
    let n = a.n();
    let mut counts = vec![0usize; n];
    for (_, c, _) in a.upper_entries() {
        counts[c] += 1;
    }
    let mut col_ptr = vec![0usize; n + 1];
    for c in 0..n {
        col_ptr[c + 1] = col_ptr[c] + counts[c];
    }
    let mut next = col_ptr.clone();
    let mut row_idx = vec![0usize; col_ptr[n]];
    let mut values = vec![0.0; col_ptr[n]];
    // upper_entries iterates rows ascending, so row indices stay sorted per column
    for (r, c, v) in a.upper_entries() {
        row_idx[next[c]] = r;
        values[next[c]] = v;
        next[c] += 1;
    }
    UpperCsc {
        col_ptr,
        row_idx,
        values,
    }
}

pub fn factor_spd(a: &SparseSym) -> Result<SpdFactor, LinalgError> {
    let perm = rcm_ordering(a);
    factor_spd_with_perm(a, perm)
}

pub fn factor_spd_with_perm(a: &SparseSym, perm: Vec<usize>) -> Result<SpdFactor, LinalgError> {
    let n = a.n();
    let ap = a.permute(&perm);
    let upper = to_upper_csc(&ap);

    // symbolic: elimination tree and column counts
    let mut parent = vec![usize::MAX; n];
    let mut flag = vec![usize::MAX; n];
    let mut lnz = vec![0usize; n];
    for k in 0..n {
        flag[k] = k;
        for idx in upper.col_ptr[k]..upper.col_ptr[k + 1] {
            let mut i = upper.row_idx[idx];
            if i >= k {
                continue;
            }
            while flag[i] != k {
                if parent[i] == usize::MAX {
                    parent[i] = k;
                }
                lnz[i] += 1;
                flag[i] = k;
                i = parent[i];
            }
        }
    }
    let mut lp = vec![0usize; n + 1];
    for k in 0..n {
        lp[k + 1] = lp[k] + lnz[k];
    }

    // numeric, up-looking row by row
    let mut li = vec![0usize; lp[n]];
    let mut lx = vec![0.0f64; lp[n]];
    let mut used = vec![0usize; n];
    let mut d = vec![0.0f64; n];
    let mut y = vec![0.0f64; n];
    let mut pattern = vec![0usize; n];
    let mut stack = vec![0usize; n];
    let mut flag = vec![usize::MAX; n];

    for k in 0..n {
        let mut top = n;
        flag[k] = k;
        y[k] = 0.0;
        for idx in upper.col_ptr[k]..upper.col_ptr[k + 1] {
            let i = upper.row_idx[idx];
            if i > k {
                continue;
            }
            y[i] += upper.values[idx];
            let mut len = 0usize;
            let mut p = i;
            while flag[p] != k {
                pattern[len] = p;
                len += 1;
                flag[p] = k;
                p = parent[p];
            }
            while len > 0 {
                len -= 1;
                top -= 1;
                stack[top] = pattern[len];
            }
        }
        d[k] = y[k];
        y[k] = 0.0;
        for t in top..n {
            let i = stack[t];
            let yi = y[i];
            y[i] = 0.0;
            for p in lp[i]..lp[i] + used[i] {
                y[li[p]] -= lx[p] * yi;
            }
            let lki = yi / d[i];
            d[k] -= lki * yi;
            let slot = lp[i] + used[i];
            li[slot] = k;
            lx[slot] = lki;
            used[i] += 1;
        }
        if d[k] <= 0.0 || !d[k].is_finite() {
            return Err(LinalgError::NotPositiveDefinite { pivot: k });
        }
    }

    Ok(SpdFactor {
        n,
        perm,
        lp,
        li,
        lx,
        d,
    })
}

impl SpdFactor {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut x = vec![0.0; self.n];
        for (old, &new) in self.perm.iter().enumerate() {
            x[new] = b[old];
        }
        // L y = x (column-oriented forward substitution)
        for j in 0..self.n {
            let xj = x[j];
            if xj != 0.0 {
                for p in self.lp[j]..self.lp[j + 1] {
                    x[self.li[p]] -= self.lx[p] * xj;
                }
            }
        }
        for j in 0..self.n {
            x[j] /= self.d[j];
        }
        // Lᵀ z = x
        for j in (0..self.n).rev() {
            let mut s = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                s -= self.lx[p] * x[self.li[p]];
            }
            x[j] = s;
        }
        let mut out = vec![0.0; self.n];
        for (old, &new) in self.perm.iter().enumerate() {
            out[old] = x[new];
        }
        out
    }
}

/// One-shot SPD solve with a residual guarantee of 1e-10 relative.
pub fn sparse_solve_spd(a: &SparseSym, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let f = factor_spd(a)?;
    let mut x = f.solve(b);
    // one step of iterative refinement tightens ill-conditioned solves
    let r: Vec<f64> = a
        .matvec(&x)
        .iter()
        .zip(b)
        .map(|(ax, bi)| bi - ax)
        .collect();
    let corr = f.solve(&r);
    for (xi, ci) in x.iter_mut().zip(&corr) {
        *xi += ci;
    }
    Ok(x)
}

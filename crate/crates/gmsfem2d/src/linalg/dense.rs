//! Column-major dense matrices and a symmetric-indefinite LDLᵀ factorization
//! with Bunch–Kaufman pivoting.

use super::LinalgError;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMat {
    rows: usize,
    cols: usize,
    data: Vec<f64>, // column-major
}

impl DenseMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DenseMat::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Row-major construction helper, mostly for tests and small matrices.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        DenseMat::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] += v;
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn set_col(&mut self, j: usize, v: &[f64]) {
        self.col_mut(j).copy_from_slice(v);
    }

    pub fn transpose(&self) -> DenseMat {
        DenseMat::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for j in 0..self.cols {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            let col = self.col(j);
            for i in 0..self.rows {
                y[i] += col[i] * xj;
            }
        }
        y
    }

    pub fn matmul(&self, other: &DenseMat) -> DenseMat {
        assert_eq!(self.cols, other.rows);
        let mut out = DenseMat::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let bcol = other.col(j);
            let ocol = out.col_mut(j);
            for (k, &bkj) in bcol.iter().enumerate() {
                if bkj == 0.0 {
                    continue;
                }
                let acol = &self.data[k * self.rows..(k + 1) * self.rows];
                for i in 0..self.rows {
                    ocol[i] += acol[i] * bkj;
                }
            }
        }
        out
    }

    /// selfᵀ · other
    pub fn tr_matmul(&self, other: &DenseMat) -> DenseMat {
        assert_eq!(self.rows, other.rows);
        DenseMat::from_fn(self.cols, other.cols, |i, j| {
            dot(self.col(i), other.col(j))
        })
    }

    pub fn frob_norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn symmetry_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                d = d.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        d
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.rows == self.cols && self.symmetry_defect() <= rel_tol * self.max_abs().max(1e-300)
    }

    /// In-place Cholesky solve for symmetric positive definite systems.
    pub fn solve_spd(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.rows;
        assert_eq!(self.cols, n);
        assert_eq!(b.len(), n);
        // lower-triangular factor, column-major
        let mut l = self.clone();
        for k in 0..n {
            let mut d = l.get(k, k);
            for j in 0..k {
                let v = l.get(k, j);
                d -= v * v;
            }
            if d <= 0.0 {
                return Err(LinalgError::NotPositiveDefinite { pivot: k });
            }
            let d = d.sqrt();
            l.set(k, k, d);
            for i in (k + 1)..n {
                let mut v = l.get(i, k);
                for j in 0..k {
                    v -= l.get(i, j) * l.get(k, j);
                }
                l.set(i, k, v / d);
            }
        }
        let mut x = b.to_vec();
        for i in 0..n {
            for j in 0..i {
                x[i] -= l.get(i, j) * x[j];
            }
            x[i] /= l.get(i, i);
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                x[i] -= l.get(j, i) * x[j];
            }
            x[i] /= l.get(i, i);
        }
        Ok(x)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

enum Pivot {
    Single,
    Double, // 2x2 block starting at this index
}

/// LDLᵀ factorization of a symmetric (possibly indefinite) matrix with
/// Bunch–Kaufman partial pivoting: P A Pᵀ = L D Lᵀ with D block diagonal
/// (1x1 and 2x2 blocks).
pub struct LdltFactor {
    n: usize,
    l: DenseMat,            // unit lower triangular; D stored on diag/subdiag
    pivots: Vec<Option<Pivot>>, // Some at block starts, None at second row of a 2x2
    swaps: Vec<(usize, usize)>, // transpositions applied in order
}

const BK_ALPHA: f64 = 0.6403882032022076; // (1 + sqrt(17)) / 8

pub fn factor_sym_indefinite(a: &DenseMat) -> Result<LdltFactor, LinalgError> {
    let n = a.rows();
    if !a.is_symmetric(1e-12) {
        return Err(LinalgError::NonSymmetric);
    }
    let scale = a.max_abs().max(1e-300);
    let tiny = 1e-14 * scale;
    let mut w = a.clone();
    let mut swaps = Vec::new();
    let mut pivots: Vec<Option<Pivot>> = (0..n).map(|_| None).collect();

    let mut k = 0;
    while k < n {
        // locate the largest off-diagonal magnitude in column k at/below row k+1
        let mut imax = k;
        let mut colmax = 0.0;
        for i in (k + 1)..n {
            let v = w.get(i, k).abs();
            if v > colmax {
                colmax = v;
                imax = i;
            }
        }
        let absakk = w.get(k, k).abs();

        let use_one_by_one;
        let mut kp = k;
        if absakk.max(colmax) <= tiny {
            return Err(LinalgError::SingularMatrix);
        }
        if absakk >= BK_ALPHA * colmax {
            use_one_by_one = true;
        } else {
            // largest magnitude in row imax (within the trailing block)
            let mut rowmax = 0.0f64;
            for j in k..n {
                if j != imax {
                    let v = if j < imax {
                        w.get(imax, j)
                    } else {
                        w.get(j, imax)
                    };
                    rowmax = rowmax.max(v.abs());
                }
            }
            if absakk * rowmax >= BK_ALPHA * colmax * colmax {
                use_one_by_one = true;
            } else if w.get(imax, imax).abs() >= BK_ALPHA * rowmax {
                use_one_by_one = true;
                kp = imax;
            } else {
                use_one_by_one = false;
                kp = imax;
            }
        }

        if use_one_by_one {
            if kp != k {
                sym_swap(&mut w, k, kp);
                swaps.push((k, kp));
            }
            let d = w.get(k, k);
            if d.abs() <= tiny {
                return Err(LinalgError::SingularMatrix);
            }
            for i in (k + 1)..n {
                let lik = w.get(i, k) / d;
                w.set(i, k, lik);
            }
            for j in (k + 1)..n {
                let ljk = w.get(j, k);
                if ljk == 0.0 {
                    continue;
                }
                for i in j..n {
                    let v = w.get(i, j) - w.get(i, k) * d * ljk;
                    w.set(i, j, v);
                }
            }
            pivots[k] = Some(Pivot::Single);
            k += 1;
        } else {
            // 2x2 pivot on rows (k, k+1) after moving imax into k+1
            if kp != k + 1 {
                sym_swap(&mut w, k + 1, kp);
                swaps.push((k + 1, kp));
            }
            let d11 = w.get(k, k);
            let d21 = w.get(k + 1, k);
            let d22 = w.get(k + 1, k + 1);
            let det = d11 * d22 - d21 * d21;
            if det.abs() <= tiny * tiny {
                return Err(LinalgError::SingularMatrix);
            }
            // L rows below the block: [w1 w2] * inv([[d11,d21],[d21,d22]])
            for i in (k + 2)..n {
                let w1 = w.get(i, k);
                let w2 = w.get(i, k + 1);
                let l1 = (w1 * d22 - w2 * d21) / det;
                let l2 = (w2 * d11 - w1 * d21) / det;
                w.set(i, k, l1);
                w.set(i, k + 1, l2);
            }
            for j in (k + 2)..n {
                let lj1 = w.get(j, k);
                let lj2 = w.get(j, k + 1);
                // original W entries for column j update: recover via D * L
                let wj1 = d11 * lj1 + d21 * lj2;
                let wj2 = d21 * lj1 + d22 * lj2;
                if wj1 == 0.0 && wj2 == 0.0 {
                    continue;
                }
                for i in j..n {
                    let v = w.get(i, j) - w.get(i, k) * wj1 - w.get(i, k + 1) * wj2;
                    w.set(i, j, v);
                }
            }
            pivots[k] = Some(Pivot::Double);
            k += 2;
        }
    }

    Ok(LdltFactor {
        n,
        l: w,
        pivots,
        swaps,
    })
}

/// Symmetric swap of rows/columns `a` and `b` (a < b) in the lower triangle,
/// including the already-computed L columns so a single final permutation applies.
fn sym_swap(w: &mut DenseMat, a: usize, b: usize) {
    let n = w.rows();
    debug_assert!(a < b);
    for j in 0..a {
        let (x, y) = (w.get(a, j), w.get(b, j));
        w.set(a, j, y);
        w.set(b, j, x);
    }
    let (daa, dbb) = (w.get(a, a), w.get(b, b));
    w.set(a, a, dbb);
    w.set(b, b, daa);
    for j in (a + 1)..b {
        let (x, y) = (w.get(j, a), w.get(b, j));
        w.set(j, a, y);
        w.set(b, j, x);
    }
    for i in (b + 1)..n {
        let (x, y) = (w.get(i, a), w.get(i, b));
        w.set(i, a, y);
        w.set(i, b, x);
    }
}

impl LdltFactor {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for &(a, c) in &self.swaps {
            x.swap(a, c);
        }
        // forward: L y = x
        for j in 0..n {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            let start = match self.pivots[j] {
                Some(Pivot::Double) => j + 2,
                _ => j + 1,
            };
            // skip the D sub-diagonal entry inside a 2x2 block
            for i in start.max(j + 1)..n {
                if matches!(self.pivots[j], Some(Pivot::Double)) && i == j + 1 {
                    continue;
                }
                x[i] -= self.l.get(i, j) * xj;
            }
        }
        // diagonal blocks
        let mut j = 0;
        while j < n {
            match self.pivots[j] {
                Some(Pivot::Single) => {
                    x[j] /= self.l.get(j, j);
                    j += 1;
                }
                Some(Pivot::Double) => {
                    let d11 = self.l.get(j, j);
                    let d21 = self.l.get(j + 1, j);
                    let d22 = self.l.get(j + 1, j + 1);
                    let det = d11 * d22 - d21 * d21;
                    let (b1, b2) = (x[j], x[j + 1]);
                    x[j] = (d22 * b1 - d21 * b2) / det;
                    x[j + 1] = (d11 * b2 - d21 * b1) / det;
                    j += 2;
                }
                None => unreachable!("pivot bookkeeping"),
            }
        }
        // backward: Lᵀ z = x
        for j in (0..n).rev() {
            let skip_sub = matches!(self.pivots.get(j), Some(Some(Pivot::Double)));
            let mut s = 0.0;
            for i in (j + 1)..n {
                if skip_sub && i == j + 1 {
                    continue;
                }
                s += self.l.get(i, j) * x[i];
            }
            x[j] -= s;
        }
        for &(a, c) in self.swaps.iter().rev() {
            x.swap(a, c);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spd_cholesky_solve() {
        let a = DenseMat::from_rows(&[&[4.0, 1.0], &[1.0, 3.0]]);
        let x = a.solve_spd(&[1.0, 2.0]).unwrap();
        // inverse of [[4,1],[1,3]] is 1/11 [[3,-1],[-1,4]]
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn spd_rejects_indefinite() {
        let a = DenseMat::from_rows(&[&[1.0, 0.0], &[0.0, -1.0]]);
        assert!(matches!(
            a.solve_spd(&[1.0, 1.0]),
            Err(LinalgError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn bunch_kaufman_zero_diagonal() {
        // [[0,1],[1,0]] x = (1,1) -> x = (1,1)
        let a = DenseMat::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let f = factor_sym_indefinite(&a).unwrap();
        let x = f.solve(&[1.0, 1.0]);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bunch_kaufman_random_indefinite() {
        // fixed pseudo-random symmetric indefinite matrix
        let n = 12;
        let mut seed = 123456789u64;
        let mut rnd = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 33) as f64) / (u32::MAX as f64) - 0.5
        };
        let mut a = DenseMat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = rnd();
                a.set(i, j, v);
                a.set(j, i, v);
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64). sin()).collect();
        let f = factor_sym_indefinite(&a).unwrap();
        let x = f.solve(&b);
        let r = a.matvec(&x);
        let err = r.iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(0.0f64, f64::max);
        assert!(err < 1e-10, "residual {err}");
    }

    #[test]
    fn bunch_kaufman_singular() {
        let a = DenseMat::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        assert!(matches!(
            factor_sym_indefinite(&a),
            Err(LinalgError::SingularMatrix)
        ));
    }
}

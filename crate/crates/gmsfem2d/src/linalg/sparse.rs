//! Compressed sparse row storage. `SparseSym` keeps the upper triangle of a
//! structurally symmetric matrix; `CsrMatrix` is a general rectangular CSR.

use super::dense::DenseMat;
use super::LinalgError;

/// Symmetric sparse matrix, upper triangle stored (diagonal included).
/// Triplets may address either triangle; entries with row > col are folded
/// onto (col, row). Duplicates are summed, so callers must emit each
/// unordered index pair once.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSym {
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self, LinalgError> {
        let mut folded: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r >= n || c >= n {
                return Err(LinalgError::IndexOutOfRange {
                    index: r.max(c),
                    size: n,
                });
            }
            let (r, c) = if r <= c { (r, c) } else { (c, r) };
            folded.push((r, c, v));
        }
        folded.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(folded.len());
        let mut values = Vec::with_capacity(folded.len());
        let mut current_row = 0usize;
        for (r, c, v) in folded {
            if current_row == r && col_idx.len() > row_ptr[current_row] {
                if let (Some(&last_c), Some(last_v)) = (col_idx.last(), values.last_mut()) {
                    if last_c == c {
                        *last_v += v;
                        continue;
                    }
                }
            }
            while current_row < r {
                current_row += 1;
                row_ptr[current_row] = col_idx.len();
            }
            col_idx.push(c);
            values.push(v);
        }
        while current_row < n {
            current_row += 1;
            row_ptr[current_row] = col_idx.len();
        }
        Ok(SparseSym {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz_upper(&self) -> usize {
        self.values.len()
    }

    /// Iterate stored (upper-triangle) entries of one row.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        self.col_idx[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    /// All stored entries as (row, col, value) with row <= col.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                y[r] += v * x[c];
                if c != r {
                    y[c] += v * x[r];
                }
            }
        }
        y
    }

    /// xᵀ · A · y
    pub fn quad_form(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        let mut acc = 0.0;
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                acc += v * x[r] * y[c];
                if c != r {
                    acc += v * x[c] * y[r];
                }
            }
        }
        acc
    }

    pub fn diag(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                if c == r {
                    d[r] = v;
                }
            }
        }
        d
    }

    pub fn to_dense(&self) -> DenseMat {
        let mut m = DenseMat::zeros(self.n, self.n);
        for (r, c, v) in self.upper_entries() {
            m.add_at(r, c, v);
            if r != c {
                m.add_at(c, r, v);
            }
        }
        m
    }

    /// A · M for a dense matrix M, exploiting symmetry.
    pub fn mul_dense(&self, m: &DenseMat) -> DenseMat {
        assert_eq!(m.rows(), self.n);
        let mut out = DenseMat::zeros(self.n, m.cols());
        for j in 0..m.cols() {
            let x = m.col(j);
            let y = out.col_mut(j);
            for r in 0..self.n {
                for (c, v) in self.row(r) {
                    y[r] += v * x[c];
                    if c != r {
                        y[c] += v * x[r];
                    }
                }
            }
        }
        out
    }

    /// Symmetric permutation: entry (i, j) moves to (perm[i], perm[j]).
    pub fn permute(&self, perm: &[usize]) -> SparseSym {
        let triplets: Vec<(usize, usize, f64)> = self
            .upper_entries()
            .map(|(r, c, v)| (perm[r], perm[c], v))
            .collect();
        SparseSym::from_triplets(self.n, &triplets).expect("permutation preserves bounds")
    }

    /// Adjacency lists of the matrix graph (both triangles, no diagonal).
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for (r, c, _) in self.upper_entries() {
            if r != c {
                adj[r].push(c);
                adj[c].push(r);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }
}

/// General rectangular CSR matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, LinalgError> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(LinalgError::IndexOutOfRange {
                    index: r.max(c),
                    size: rows.max(cols),
                });
            }
            entries.push((r, c, v));
        }
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut current_row = 0usize;
        for (r, c, v) in entries {
            if col_idx.len() > row_ptr[current_row] && current_row == r {
                if let (Some(&last_c), Some(last_v)) = (col_idx.last(), values.last_mut()) {
                    if last_c == c {
                        *last_v += v;
                        continue;
                    }
                }
            }
            while current_row < r {
                current_row += 1;
                row_ptr[current_row] = col_idx.len();
            }
            col_idx.push(c);
            values.push(v);
        }
        while current_row < rows {
            current_row += 1;
            row_ptr[current_row] = col_idx.len();
        }
        Ok(CsrMatrix {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        self.col_idx[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for r in 0..self.rows {
            y[r] = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
        y
    }

    pub fn transpose_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for r in 0..self.rows {
            let xr = x[r];
            if xr == 0.0 {
                continue;
            }
            for (c, v) in self.row(r) {
                y[c] += v * xr;
            }
        }
        y
    }
}

/// Reverse Cuthill–McKee fill-reducing ordering. Returns `perm` such that
/// new index = perm[old index].
pub fn rcm_ordering(a: &SparseSym) -> Vec<usize> {
    let n = a.n();
    let adj = a.adjacency();
    let degree: Vec<usize> = adj.iter().map(|l| l.len()).collect();
    let mut visited = vec![false; n];
    let mut order: Vec<usize> = Vec::with_capacity(n);

    // process components from lowest-degree unvisited seeds
    let mut seeds: Vec<usize> = (0..n).collect();
    seeds.sort_by_key(|&i| (degree[i], i));
    for &seed in &seeds {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(seed, &adj, &degree);
        visited[start] = true;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nbrs: Vec<usize> = adj[u].iter().copied().filter(|&v| !visited[v]).collect();
            nbrs.sort_by_key(|&v| (degree[v], v));
            for v in nbrs {
                visited[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    let mut perm = vec![0usize; n];
    for (new, &old) in order.iter().enumerate() {
        perm[old] = new;
    }
    perm
}

fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut current = seed;
    let mut last_ecc = 0usize;
    for _ in 0..8 {
        let (levels, ecc) = bfs_levels(current, adj);
        if ecc <= last_ecc && last_ecc > 0 {
            break;
        }
        last_ecc = ecc;
        // lowest-degree node in the deepest level
        let far: Vec<usize> = (0..adj.len())
            .filter(|&i| levels[i] == Some(ecc))
            .collect();
        if let Some(&next) = far.iter().min_by_key(|&&i| (degree[i], i)) {
            if next == current {
                break;
            }
            current = next;
        } else {
            break;
        }
    }
    current
}

fn bfs_levels(start: usize, adj: &[Vec<usize>]) -> (Vec<Option<usize>>, usize) {
    let mut levels = vec![None; adj.len()];
    levels[start] = Some(0);
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(start);
    let mut ecc = 0;
    while let Some(u) = queue.pop_front() {
        let lu = levels[u].unwrap();
        ecc = ecc.max(lu);
        for &v in &adj[u] {
            if levels[v].is_none() {
                levels[v] = Some(lu + 1);
                queue.push_back(v);
            }
        }
    }
    (levels, ecc)
}

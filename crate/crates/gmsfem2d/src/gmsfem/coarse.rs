//! Partition of unity, the global downscaling operator, and the coarse
//! Galerkin solves with fine-scale reconstruction.

use std::path::Path;

use super::spectral::OfflineBasis;
use super::GmsfemError;
use crate::fem::{element_stokes, DofLayout, FineSystem};
use crate::linalg::{factor_sym_indefinite, DenseMat, LinalgError, SparseSym};
use crate::mesh::{CoarseGrid, FineMesh};

/// Coarse hat functions sampled at the fine nodes, restricted to the
/// meshed region. The hats sum to one at every fine node; each hat is
/// supported in the coarse triangles around its node.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    /// values[i][k]: hat of coarse node i at fine node k
    pub values: Vec<Vec<f64>>,
}

pub fn build_pou(coarse: &CoarseGrid, fine: &FineMesh) -> PartitionOfUnity {
    let values = (0..coarse.n_nodes())
        .map(|i| fine.nodes.iter().map(|&p| coarse.hat_value(i, p)).collect())
        .collect();
    PartitionOfUnity { values }
}

impl PartitionOfUnity {
    pub fn n_coarse(&self) -> usize {
        self.values.len()
    }
}

/// One row of the downscaling operator: a sparse fine-DOF vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVec {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
}

impl SparseVec {
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.idx
            .iter()
            .zip(&self.val)
            .map(|(&i, v)| v * dense[i])
            .sum()
    }
}

/// The global coarse space: rows of R0 with their provenance. Row k of R0
/// is a conforming multiscale basis function expressed on the fine DOFs.
#[derive(Debug, Clone)]
pub struct GlobalCoarseSpace {
    pub n_fine: usize,
    pub rows: Vec<SparseVec>,
    /// (coarse node, eigenvalue rank) per row, in row order
    pub row_meta: Vec<(usize, usize)>,
}

impl GlobalCoarseSpace {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// R0 · v
    pub fn apply(&self, fine: &[f64]) -> Vec<f64> {
        assert_eq!(fine.len(), self.n_fine);
        self.rows.iter().map(|r| r.dot_dense(fine)).collect()
    }

    /// R0ᵀ · u0
    pub fn apply_transpose(&self, coarse: &[f64]) -> Vec<f64> {
        assert_eq!(coarse.len(), self.rows.len());
        let mut out = vec![0.0; self.n_fine];
        for (row, &c) in self.rows.iter().zip(coarse) {
            if c == 0.0 {
                continue;
            }
            for (&i, v) in row.idx.iter().zip(&row.val) {
                out[i] += c * v;
            }
        }
        out
    }

    /// Dense R0 · A · R0ᵀ.
    pub fn triple_product(&self, a: &SparseSym) -> DenseMat {
        let n = self.n_rows();
        let mut out = DenseMat::zeros(n, n);
        for (r, row) in self.rows.iter().enumerate() {
            // y = A · row (dense intermediate)
            let mut x = vec![0.0; self.n_fine];
            for (&i, v) in row.idx.iter().zip(&row.val) {
                x[i] = *v;
            }
            let y = a.matvec(&x);
            for s in 0..n {
                out.set(r, s, self.rows[s].dot_dense(&y));
            }
        }
        // symmetrize roundoff
        for r in 0..n {
            for s in (r + 1)..n {
                let v = 0.5 * (out.get(r, s) + out.get(s, r));
                out.set(r, s, v);
                out.set(s, r, v);
            }
        }
        out
    }
}

/// Numerical rank of the coarse Gram matrix R0 M R0ᵀ by pivoted Cholesky.
pub fn coarse_gram_rank(space: &GlobalCoarseSpace, m: &SparseSym, rel_tol: f64) -> usize {
    let gram = space.triple_product(m);
    let n = gram.rows();
    let mut g = gram.clone();
    let mut active: Vec<usize> = (0..n).collect();
    let scale = (0..n).map(|i| g.get(i, i)).fold(0.0f64, f64::max);
    let mut rank = 0;
    while rank < n {
        // pick the largest remaining diagonal
        let (pos, &piv) = active
            .iter()
            .enumerate()
            .max_by(|a, b| {
                g.get(*a.1, *a.1)
                    .partial_cmp(&g.get(*b.1, *b.1))
                    .unwrap()
            })
            .map(|(p, i)| (p, i))
            .unwrap();
        let d = g.get(piv, piv);
        if d <= rel_tol * scale {
            break;
        }
        active.swap_remove(pos);
        for &i in &active {
            for &j in &active {
                let v = g.get(i, j) - g.get(i, piv) * g.get(j, piv) / d;
                g.set(i, j, v);
            }
        }
        rank += 1;
        if active.is_empty() {
            break;
        }
    }
    rank
}

/// Assemble R0: each offline vector is multiplied by its coarse node's hat
/// (sampled at the DOF coordinates) and scattered to global DOFs; DOFs
/// constrained by the global Dirichlet set are zeroed.
pub fn assemble_r0(
    coarse: &CoarseGrid,
    layout: &DofLayout,
    dirichlet: &[Option<f64>],
    bases: &[OfflineBasis],
) -> Result<GlobalCoarseSpace, GmsfemError> {
    let n_fine = layout.ndof();
    assert_eq!(dirichlet.len(), n_fine);
    let mut rows = Vec::new();
    let mut row_meta = Vec::new();
    for basis in bases {
        // hat values per local DOF, keyed by the DOF coordinate
        let hat: Vec<f64> = basis
            .dof_to_global
            .iter()
            .map(|&g| {
                let geom = g / layout.components;
                coarse.hat_value(basis.coarse_node, layout.coords[geom])
            })
            .collect();
        for k in 0..basis.m_off() {
            let mut idx = Vec::new();
            let mut val = Vec::new();
            let col = basis.vectors.col(k);
            for (ld, &g) in basis.dof_to_global.iter().enumerate() {
                if dirichlet[g].is_some() {
                    continue;
                }
                let v = hat[ld] * col[ld];
                if v != 0.0 {
                    idx.push(g);
                    val.push(v);
                }
            }
            // deterministic scatter order
            let mut order: Vec<usize> = (0..idx.len()).collect();
            order.sort_by_key(|&i| idx[i]);
            rows.push(SparseVec {
                idx: order.iter().map(|&i| idx[i]).collect(),
                val: order.iter().map(|&i| val[i]).collect(),
            });
            row_meta.push((basis.coarse_node, k));
        }
    }
    Ok(GlobalCoarseSpace {
        n_fine,
        rows,
        row_meta,
    })
}

/// Galerkin coarse solve: R0 A R0ᵀ u0 = R0 (F − A u_g), reconstructed as
/// u_ms = R0ᵀ u0 + u_g.
pub fn coarse_solve(
    space: &GlobalCoarseSpace,
    system: &FineSystem,
) -> Result<(Vec<f64>, Vec<f64>), GmsfemError> {
    let lift = system.lift_vector();
    let a_lift = system.stiffness.matvec(&lift);
    let rhs_fine: Vec<f64> = system
        .load
        .iter()
        .zip(&a_lift)
        .map(|(f, al)| f - al)
        .collect();
    let b = space.apply(&rhs_fine);
    let ac = space.triple_product(&system.stiffness);
    let u0 = ac.solve_spd(&b).map_err(|e| match e {
        LinalgError::NotPositiveDefinite { .. } => GmsfemError::SingularCoarseMatrix,
        other => GmsfemError::Linalg(other),
    })?;
    let mut u_ms = space.apply_transpose(&u0);
    for (x, l) in u_ms.iter_mut().zip(&lift) {
        *x += l;
    }
    Ok((u0, u_ms))
}

/// Coarse pressure space for the Stokes solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoarsePressure {
    /// Indicators of the coarse triangles intersected with the meshed region.
    PiecewiseConstant,
    /// The fine nodal pressure space (full-space reproduction checks).
    FineNodal,
}

#[derive(Debug, Clone)]
pub struct StokesCoarseSolution {
    pub u0: Vec<f64>,
    pub p0: Vec<f64>,
    /// downscaled velocity on all fine velocity DOFs
    pub velocity: Vec<f64>,
    /// pressure per fine triangle (piecewise-constant mode) or per fine
    /// pressure node (fine-nodal mode)
    pub pressure: Vec<f64>,
    pub pressure_space: CoarsePressure,
}

/// Saddle-point coarse solve for Stokes: the offline velocity space against
/// a coarse pressure space, with a mean-zero pressure gauge.
pub fn coarse_solve_stokes(
    space: &GlobalCoarseSpace,
    pressure: CoarsePressure,
    coarse: &CoarseGrid,
    mesh: &FineMesh,
    system: &FineSystem,
) -> Result<StokesCoarseSolution, GmsfemError> {
    let n_v = space.n_rows();
    let lift = system.lift_vector();

    // coarse divergence rows over fine velocity DOFs, plus gauge weights
    let (b_rows, weights, active_cells): (Vec<Vec<f64>>, Vec<f64>, Option<Vec<usize>>) =
        match pressure {
            CoarsePressure::PiecewiseConstant => {
                let layout = &system.layout;
                let mut rows = vec![vec![0.0; layout.ndof()]; coarse.n_triangles()];
                let mut areas = vec![0.0; coarse.n_triangles()];
                for t in 0..mesh.n_triangles() {
                    let parent = mesh.coarse_parent[t];
                    let verts = mesh.vertices(t);
                    let (_, div) = element_stokes(verts).map_err(GmsfemError::Fem)?;
                    let geom = layout.element_geom(mesh, t);
                    let dofs: Vec<usize> = geom
                        .iter()
                        .flat_map(|&g| [layout.dof(g, 0), layout.dof(g, 1)])
                        .collect();
                    for p in 0..12 {
                        // indicator pressure: sum the P1 columns
                        let v: f64 = div[p].iter().sum();
                        rows[parent][dofs[p]] += v;
                    }
                    areas[parent] += mesh.area(t);
                }
                let active: Vec<usize> = (0..coarse.n_triangles())
                    .filter(|&k| areas[k] > 0.0)
                    .collect();
                let rows_active: Vec<Vec<f64>> =
                    active.iter().map(|&k| std::mem::take(&mut rows[k])).collect();
                let weights_active: Vec<f64> = active.iter().map(|&k| areas[k]).collect();
                (rows_active, weights_active, Some(active))
            }
            CoarsePressure::FineNodal => {
                let b = system.divergence.as_ref().expect("Stokes system");
                let pm = system.pressure_mass.as_ref().unwrap();
                let n_p = b.rows();
                let mut rows = vec![vec![0.0; system.layout.ndof()]; n_p];
                for r in 0..n_p {
                    for (c, v) in b.row(r) {
                        rows[r][c] = v;
                    }
                }
                let ones = vec![1.0; n_p];
                (rows, pm.matvec(&ones), None)
            }
        };
    let n_p = b_rows.len();

    // coarse operators
    let acc = space.triple_product(&system.stiffness);
    let mut bc = DenseMat::zeros(n_p, n_v);
    for (r, row) in b_rows.iter().enumerate() {
        for (c, rv) in space.rows.iter().enumerate() {
            bc.set(r, c, rv.dot_dense(row));
        }
    }

    // symmetric saddle with a rank-one mean-zero constraint:
    // unknowns (u0, q0, λ) with q0 = −p0
    let n = n_v + n_p + 1;
    let mut k = DenseMat::zeros(n, n);
    for i in 0..n_v {
        for j in 0..n_v {
            k.set(i, j, acc.get(i, j));
        }
    }
    for r in 0..n_p {
        for c in 0..n_v {
            let v = bc.get(r, c);
            k.set(n_v + r, c, v);
            k.set(c, n_v + r, v);
        }
    }
    for r in 0..n_p {
        k.set(n_v + r, n_v + n_p, weights[r]);
        k.set(n_v + n_p, n_v + r, weights[r]);
    }

    let a_lift = system.stiffness.matvec(&lift);
    let rhs_fine: Vec<f64> = system
        .load
        .iter()
        .zip(&a_lift)
        .map(|(f, al)| f - al)
        .collect();
    let mut rhs = space.apply(&rhs_fine);
    rhs.resize(n, 0.0);
    for (r, row) in b_rows.iter().enumerate() {
        let blift: f64 = row.iter().zip(&lift).map(|(b, l)| b * l).sum();
        rhs[n_v + r] = -blift;
    }

    let factor = factor_sym_indefinite(&k).map_err(|e| match e {
        LinalgError::SingularMatrix => GmsfemError::CoarseInfSupFailure,
        other => GmsfemError::Linalg(other),
    })?;
    let sol = factor.solve(&rhs);
    let u0 = sol[..n_v].to_vec();
    let p0: Vec<f64> = sol[n_v..n_v + n_p].iter().map(|q| -q).collect();

    let mut velocity = space.apply_transpose(&u0);
    for (x, l) in velocity.iter_mut().zip(&lift) {
        *x += l;
    }

    let pressure_field = match pressure {
        CoarsePressure::PiecewiseConstant => {
            // per fine triangle, from the active coarse cells
            let active = active_cells.unwrap();
            let mut per_cell = vec![0.0; coarse.n_triangles()];
            for (slot, &cell) in active.iter().enumerate() {
                per_cell[cell] = p0[slot];
            }
            (0..mesh.n_triangles())
                .map(|t| per_cell[mesh.coarse_parent[t]])
                .collect()
        }
        CoarsePressure::FineNodal => p0.clone(),
    };

    Ok(StokesCoarseSolution {
        u0,
        p0,
        velocity,
        pressure: pressure_field,
        pressure_space: pressure,
    })
}

/// Text export of the offline spaces: per-neighborhood eigenvalues and the
/// sparsity of each basis vector.
pub fn export_offline(bases: &[OfflineBasis], path: &Path) -> std::io::Result<()> {
    use std::fmt::Write as _;
    let mut out = String::new();
    writeln!(out, "OFFLINE_SPACES {}", bases.len()).unwrap();
    for b in bases {
        writeln!(out, "NEIGHBORHOOD {} modes {}", b.coarse_node, b.m_off()).unwrap();
        write!(out, "eigenvalues").unwrap();
        for v in &b.eigenvalues {
            write!(out, " {v:.12e}").unwrap();
        }
        writeln!(out).unwrap();
        for k in 0..b.m_off() {
            let nnz = b.vectors.col(k).iter().filter(|v| **v != 0.0).count();
            writeln!(out, "vector {k} nnz {nnz} of {}", b.vectors.rows()).unwrap();
        }
    }
    std::fs::write(path, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Circle, Rect};
    use crate::mesh::{build_coarse_grid, build_domain, generate_fine_mesh, NodeMarker};

    fn grids(inclusions: Vec<Circle>) -> (CoarseGrid, FineMesh) {
        let domain = build_domain(Rect::unit_square(), inclusions, 16).unwrap();
        let coarse = build_coarse_grid(&domain, 0.25).unwrap();
        let fine = generate_fine_mesh(&domain, &coarse, 0.0625, 20.0).unwrap();
        (coarse, fine)
    }

    #[test]
    fn pou_sums_to_one_everywhere() {
        let (coarse, fine) = grids(vec![Circle::new(0.52, 0.47, 0.1)]);
        let pou = build_pou(&coarse, &fine);
        for k in 0..fine.n_nodes() {
            let s: f64 = (0..coarse.n_nodes()).map(|i| pou.values[i][k]).sum();
            assert!((s - 1.0).abs() < 1e-12, "node {k}: {s}");
            for i in 0..coarse.n_nodes() {
                let v = pou.values[i][k];
                assert!((-1e-12..=1.0 + 1e-12).contains(&v));
            }
        }
    }

    #[test]
    fn pou_is_nodal_at_coarse_nodes() {
        let (coarse, fine) = grids(vec![]);
        let pou = build_pou(&coarse, &fine);
        for i in 0..coarse.n_nodes() {
            for (k, &p) in fine.nodes.iter().enumerate() {
                if p.dist(coarse.nodes[i]) < 1e-12 {
                    assert!((pou.values[i][k] - 1.0).abs() < 1e-12);
                }
                for j in 0..coarse.n_nodes() {
                    if j != i && p.dist(coarse.nodes[j]) < 1e-12 {
                        assert!(pou.values[i][k].abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn pou_supported_in_neighborhood() {
        let (coarse, fine) = grids(vec![]);
        let pou = build_pou(&coarse, &fine);
        for i in 0..coarse.n_nodes() {
            let nb = crate::mesh::build_neighborhood(&coarse, &fine, i);
            let inside: std::collections::BTreeSet<usize> =
                nb.local_to_global.iter().copied().collect();
            for (k, v) in pou.values[i].iter().enumerate() {
                if *v > 1e-12 {
                    assert!(inside.contains(&k), "node {k} outside patch of {i}");
                }
            }
        }
    }

    #[test]
    fn gram_rank_of_orthogonal_rows_is_full() {
        // two disjoint single-DOF rows against the identity mass
        let m = SparseSym::from_triplets(4, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0), (3, 3, 1.0)])
            .unwrap();
        let space = GlobalCoarseSpace {
            n_fine: 4,
            rows: vec![
                SparseVec { idx: vec![0], val: vec![1.0] },
                SparseVec { idx: vec![2], val: vec![2.0] },
            ],
            row_meta: vec![(0, 0), (1, 0)],
        };
        assert_eq!(coarse_gram_rank(&space, &m, 1e-10), 2);
        let dup = GlobalCoarseSpace {
            n_fine: 4,
            rows: vec![
                SparseVec { idx: vec![0], val: vec![1.0] },
                SparseVec { idx: vec![0], val: vec![0.5] },
            ],
            row_meta: vec![(0, 0), (1, 0)],
        };
        assert_eq!(coarse_gram_rank(&dup, &m, 1e-10), 1);
    }

    #[test]
    fn perforation_markers_present_when_hole_cuts_patch() {
        let (_, fine) = grids(vec![Circle::new(0.52, 0.47, 0.1)]);
        assert!(fine.node_markers.iter().any(|&m| m == NodeMarker::Perforation));
    }
}

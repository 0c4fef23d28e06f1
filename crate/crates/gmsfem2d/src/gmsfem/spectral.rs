//! Projection of the local forms onto the snapshot space and selection of
//! the dominant modes from the generalized eigenproblem.

use super::local::LocalOperator;
use super::{GmsfemError, SnapshotSet};
use crate::linalg::{eig_sym_generalized, DenseMat};

/// Snapshot-space forms: A_off = Ψᵀ A_loc Ψ and S_off = Ψᵀ S_loc Ψ.
pub fn local_forms(
    local: &LocalOperator,
    snapshots: &SnapshotSet,
) -> Result<(DenseMat, DenseMat), GmsfemError> {
    if snapshots.count() == 0 {
        return Err(GmsfemError::EmptySnapshotSet);
    }
    if snapshots.columns.rows() != local.ndof() {
        return Err(GmsfemError::DimensionMismatch {
            expected: local.ndof(),
            got: snapshots.columns.rows(),
        });
    }
    let a_psi = local.a_loc.mul_dense(&snapshots.columns);
    let s_psi = local.s_loc.mul_dense(&snapshots.columns);
    let a_off = snapshots.columns.tr_matmul(&a_psi);
    let s_off = snapshots.columns.tr_matmul(&s_psi);
    Ok((a_off, s_off))
}

/// Eigenvectors of the pencil with the smallest eigenvalues, mapped back to
/// local fine DOFs through the snapshot columns. If the retained numerical
/// rank is below `m_off` the basis carries every available mode and
/// `truncated()` reports the shortfall.
#[derive(Debug, Clone)]
pub struct OfflineBasis {
    pub coarse_node: usize,
    pub eigenvalues: Vec<f64>,
    /// local fine-DOF vectors, one column per retained mode
    pub vectors: DenseMat,
    /// local field DOF -> global field DOF
    pub dof_to_global: Vec<usize>,
    pub requested: usize,
}

impl OfflineBasis {
    pub fn m_off(&self) -> usize {
        self.vectors.cols()
    }

    pub fn truncated(&self) -> bool {
        self.m_off() < self.requested
    }

    /// Keep only the first `m` modes (spaces are nested in `m`).
    pub fn truncate(&self, m: usize) -> OfflineBasis {
        let keep = m.min(self.m_off());
        let mut vectors = DenseMat::zeros(self.vectors.rows(), keep);
        for k in 0..keep {
            vectors.set_col(k, self.vectors.col(k));
        }
        OfflineBasis {
            coarse_node: self.coarse_node,
            eigenvalues: self.eigenvalues[..keep].to_vec(),
            vectors,
            dof_to_global: self.dof_to_global.clone(),
            requested: m,
        }
    }
}

pub fn select_offline(
    local: &LocalOperator,
    snapshots: &SnapshotSet,
    a_off: &DenseMat,
    s_off: &DenseMat,
    m_off: usize,
    rank_tol: f64,
) -> Result<OfflineBasis, GmsfemError> {
    assert!(m_off >= 1, "m_off must be at least 1");
    let (values, pencil_vectors) = eig_sym_generalized(a_off, s_off, rank_tol)?;
    let keep = m_off.min(values.len());
    let mut selected = DenseMat::zeros(pencil_vectors.rows(), keep);
    for k in 0..keep {
        selected.set_col(k, pencil_vectors.col(k));
    }
    let vectors = snapshots.columns.matmul(&selected);
    Ok(OfflineBasis {
        coarse_node: snapshots.coarse_node,
        eigenvalues: values[..keep].to_vec(),
        vectors,
        dof_to_global: local.dof_to_global.clone(),
        requested: m_off,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble, BoundaryData, OperatorKind};
    use crate::geometry::{Circle, Rect};
    use crate::gmsfem::local::{snapshot_harmonic, snapshot_spectral};
    use crate::gmsfem::Provenance;
    use crate::mesh::{build_coarse_grid, build_domain, build_neighborhood, generate_fine_mesh};

    fn local_with(
        op: OperatorKind,
        inclusions: Vec<Circle>,
        node: usize,
    ) -> (LocalOperator, SnapshotSet) {
        let domain = build_domain(Rect::unit_square(), inclusions, 16).unwrap();
        let coarse = build_coarse_grid(&domain, 0.25).unwrap();
        let fine = generate_fine_mesh(&domain, &coarse, 0.0625, 20.0).unwrap();
        let bc = match op.components() {
            1 => BoundaryData::scalar_constant(0.0, 0.0),
            _ => BoundaryData::vector_constant([0.0, 0.0], [0.0, 0.0]),
        };
        let layout = assemble(op, &fine, &bc).unwrap().layout;
        let nb = build_neighborhood(&coarse, &fine, node);
        let local = LocalOperator::new(op, &fine, &layout, &nb).unwrap();
        let snaps = snapshot_spectral(&local);
        (local, snaps)
    }

    #[test]
    fn spectral_forms_equal_local_assembly_on_free_block() {
        let (local, snaps) = local_with(OperatorKind::laplace(), vec![], 6);
        let (a_off, s_off) = local_forms(&local, &snaps).unwrap();
        // spectral snapshots are the identity on the free DOFs, which is all
        // DOFs in an unperforated neighborhood
        let a_dense = local.a_loc.to_dense();
        let s_dense = local.s_loc.to_dense();
        for i in 0..local.ndof() {
            for j in 0..local.ndof() {
                assert!((a_off.get(i, j) - a_dense.get(i, j)).abs() < 1e-14);
                assert!((s_off.get(i, j) - s_dense.get(i, j)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn constant_snapshot_with_interior_hole_has_positive_energy() {
        let op = OperatorKind::laplace();
        let domain =
            build_domain(Rect::unit_square(), vec![Circle::new(0.52, 0.47, 0.1)], 16).unwrap();
        let coarse = build_coarse_grid(&domain, 0.25).unwrap();
        let fine = generate_fine_mesh(&domain, &coarse, 0.0625, 20.0).unwrap();
        let bc = BoundaryData::scalar_constant(0.0, 0.0);
        let layout = assemble(op, &fine, &bc).unwrap().layout;
        let nb = build_neighborhood(&coarse, &fine, 6);
        assert!(!nb.perforation_dofs.is_empty(), "hole must cut this patch");
        let local = LocalOperator::new(op, &fine, &layout, &nb).unwrap();
        // harmonic extension of all-ones outline data vanishes on the hole,
        // so it is not constant and carries energy
        let snaps = snapshot_harmonic(&local).unwrap();
        let mut combo = vec![0.0; local.ndof()];
        for k in 0..snaps.count() {
            for d in 0..local.ndof() {
                combo[d] += snaps.columns.get(d, k);
            }
        }
        let energy = local.a_loc.quad_form(&combo, &combo);
        assert!(energy > 1e-8, "energy {energy}");
    }

    #[test]
    fn elasticity_auxiliary_form_scales_with_lame_sum() {
        let (local1, snaps1) = local_with(OperatorKind::elasticity(1e9, 0.22), vec![], 6);
        let (local2, snaps2) = local_with(OperatorKind::elasticity(2e9, 0.22), vec![], 6);
        let (_, s1) = local_forms(&local1, &snaps1).unwrap();
        let (_, s2) = local_forms(&local2, &snaps2).unwrap();
        // S scales linearly in (λ + 2μ), which is linear in E at fixed ν
        for i in 0..s1.rows() {
            for j in 0..s1.cols() {
                assert!((2.0 * s1.get(i, j) - s2.get(i, j)).abs() < 1e-9 * s2.max_abs());
            }
        }
    }

    #[test]
    fn identical_forms_give_unit_eigenvalues() {
        let (local, snaps) = local_with(OperatorKind::laplace(), vec![], 6);
        let n = snaps.count().min(8);
        let mut small = DenseMat::identity(n);
        small.set(0, 1, 0.25);
        small.set(1, 0, 0.25);
        let sub_snaps = SnapshotSet {
            coarse_node: snaps.coarse_node,
            columns: DenseMat::from_fn(local.ndof(), n, |i, j| snaps.columns.get(i, j)),
            provenance: Provenance::Spectral,
        };
        let basis =
            select_offline(&local, &sub_snaps, &small, &small, 3, 1e-10).unwrap();
        for v in &basis.eigenvalues {
            assert!((v - 1.0).abs() < 1e-10);
        }
        assert_eq!(basis.m_off(), 3);
    }

    #[test]
    fn diagonal_pencil_selects_smallest_ratios() {
        let (local, snaps) = local_with(OperatorKind::laplace(), vec![], 0);
        let n = 3;
        let sub_snaps = SnapshotSet {
            coarse_node: snaps.coarse_node,
            columns: DenseMat::from_fn(local.ndof(), n, |i, j| snaps.columns.get(i, j)),
            provenance: Provenance::Spectral,
        };
        let a = DenseMat::from_rows(&[
            &[1.0, 0.0, 0.0],
            &[0.0, 4.0, 0.0],
            &[0.0, 0.0, 9.0],
        ]);
        let s = DenseMat::identity(3);
        let basis = select_offline(&local, &sub_snaps, &a, &s, 2, 1e-10).unwrap();
        assert_eq!(basis.eigenvalues.len(), 2);
        assert!((basis.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!((basis.eigenvalues[1] - 4.0).abs() < 1e-12);
        // selected pencil vectors are coordinate directions -> mapped vectors
        // equal the snapshot columns
        for d in 0..local.ndof() {
            assert!((basis.vectors.get(d, 0) - sub_snaps.columns.get(d, 0)).abs() < 1e-12);
            assert!((basis.vectors.get(d, 1) - sub_snaps.columns.get(d, 1)).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_deficient_mass_flags_truncation() {
        let (local, snaps) = local_with(OperatorKind::laplace(), vec![], 0);
        let n = 2;
        let sub_snaps = SnapshotSet {
            coarse_node: snaps.coarse_node,
            columns: DenseMat::from_fn(local.ndof(), n, |i, j| snaps.columns.get(i, j)),
            provenance: Provenance::Spectral,
        };
        let a = DenseMat::identity(2);
        let s = DenseMat::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let basis = select_offline(&local, &sub_snaps, &a, &s, 2, 1e-10).unwrap();
        assert_eq!(basis.m_off(), 1);
        assert!(basis.truncated());
    }

    #[test]
    fn offline_vectors_are_s_orthonormal() {
        let op = OperatorKind::laplace();
        let (local, _) = local_with(op, vec![], 6);
        let snaps = snapshot_harmonic(&local).unwrap();
        let (a_off, s_off) = local_forms(&local, &snaps).unwrap();
        let basis = select_offline(&local, &snaps, &a_off, &s_off, 6, 1e-10).unwrap();
        for i in 0..basis.m_off() {
            for j in 0..basis.m_off() {
                let v = local.s_loc.quad_form(basis.vectors.col(i), basis.vectors.col(j));
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-8, "({i},{j}): {v}");
            }
        }
        // eigenvalues ascend and are nonnegative
        for w in basis.eigenvalues.windows(2) {
            assert!(w[0] <= w[1] + 1e-12);
        }
        assert!(basis.eigenvalues[0] >= -1e-10);
    }
}

//! Local neighborhood operators and snapshot generation.

use super::{GmsfemError, Provenance, SnapshotSet};
use crate::fem::{
    element_elasticity, element_laplace, element_mass, element_p2_mass, element_stokes,
    p2_connectivity, DofLayout, FemError, OperatorKind, PdeKind, PerforationBc, StokesSolver,
};
use crate::geometry::Point;
use crate::linalg::{factor_spd, CsrMatrix, DenseMat, SparseSym, SpdFactor};
use crate::mesh::{EdgeMarker, FineMesh, Neighborhood};

/// Assembled forms of one coarse neighborhood: the energy form and the
/// auxiliary mass-like form integrated over the neighborhood's elements,
/// with no boundary elimination, plus the DOF classification used by the
/// local solves.
pub struct LocalOperator {
    pub op: OperatorKind,
    pub coarse_node: usize,
    /// energy form (stiffness / elastic energy / velocity-gradient form)
    pub a_loc: SparseSym,
    /// auxiliary form (mass; (λ+2μ)-weighted mass for elasticity;
    /// velocity mass for Stokes)
    pub s_loc: SparseSym,
    pub divergence: Option<CsrMatrix>,
    pub pressure_mass: Option<SparseSym>,
    /// local field DOF -> global field DOF
    pub dof_to_global: Vec<usize>,
    /// local field DOF coordinates
    pub dof_coords: Vec<Point>,
    /// local field DOFs on the neighborhood outline (excluding holes)
    pub boundary_dofs: Vec<usize>,
    /// local field DOFs on hole boundaries
    pub perforation_dofs: Vec<usize>,
}

impl LocalOperator {
    pub fn new(
        op: OperatorKind,
        mesh: &FineMesh,
        global_layout: &DofLayout,
        nb: &Neighborhood,
    ) -> Result<Self, GmsfemError> {
        let components = op.components();
        let n_vert = nb.n_local();
        let to_local = |g: usize| nb.global_to_local(g).expect("element vertex in local set");
        let local_tris: Vec<[usize; 3]> = nb
            .fine_elements
            .iter()
            .map(|&e| {
                let t = mesh.triangles[e];
                [to_local(t[0]), to_local(t[1]), to_local(t[2])]
            })
            .collect();

        // geometric nodes: local vertices, then local edges for Stokes
        let mut geom_global: Vec<usize> = nb.local_to_global.clone();
        let mut geom_coords: Vec<Point> =
            nb.local_to_global.iter().map(|&g| mesh.nodes[g]).collect();
        let p2 = if op.is_stokes() {
            let conn = p2_connectivity(&local_tris);
            let global_conn = global_layout
                .p2
                .as_ref()
                .expect("global layout must be quadratic for Stokes");
            for &(la, lb) in &conn.edges {
                let (ga, gb) = (nb.local_to_global[la], nb.local_to_global[lb]);
                let key = (ga.min(gb), ga.max(gb));
                let ge = global_conn
                    .edges
                    .binary_search(&key)
                    .expect("local edge exists globally");
                geom_global.push(global_layout.n_vertices + ge);
                let (pa, pb) = (mesh.nodes[ga], mesh.nodes[gb]);
                geom_coords.push(Point::new(0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)));
            }
            Some(conn)
        } else {
            None
        };
        let n_geom = geom_global.len();
        let ndof = n_geom * components;
        let dof_to_global: Vec<usize> = (0..ndof)
            .map(|d| geom_global[d / components] * components + d % components)
            .collect();
        let dof_coords: Vec<Point> = (0..ndof).map(|d| geom_coords[d / components]).collect();

        // assembly over the neighborhood elements
        let mut a_trips = Vec::new();
        let mut s_trips = Vec::new();
        let mut div_trips = Vec::new();
        let mut pmass_trips = Vec::new();
        for (le, &e) in nb.fine_elements.iter().enumerate() {
            let verts = mesh.vertices(e);
            let tri = local_tris[le];
            match op.variant {
                PdeKind::Laplace => {
                    let k = element_laplace(verts).map_err(GmsfemError::Fem)?;
                    let m = element_mass(verts).map_err(GmsfemError::Fem)?;
                    for p in 0..3 {
                        for q in p..3 {
                            a_trips.push((tri[p], tri[q], k[p][q]));
                            s_trips.push((tri[p], tri[q], m[p][q]));
                        }
                    }
                }
                PdeKind::Elasticity { .. } => {
                    let lame = op.lame().unwrap();
                    let k = element_elasticity(verts, lame).map_err(GmsfemError::Fem)?;
                    let m = element_mass(verts).map_err(GmsfemError::Fem)?;
                    let w = lame.lambda + 2.0 * lame.mu;
                    let dofs: Vec<usize> =
                        tri.iter().flat_map(|&v| [2 * v, 2 * v + 1]).collect();
                    for p in 0..6 {
                        for q in p..6 {
                            a_trips.push((dofs[p], dofs[q], k[p][q]));
                        }
                    }
                    for c in 0..2 {
                        for p in 0..3 {
                            for q in p..3 {
                                s_trips.push((2 * tri[p] + c, 2 * tri[q] + c, w * m[p][q]));
                            }
                        }
                    }
                }
                PdeKind::Stokes { .. } => {
                    let conn = p2.as_ref().unwrap();
                    let (vel, div) = element_stokes(verts).map_err(GmsfemError::Fem)?;
                    let m2 = element_p2_mass(verts).map_err(GmsfemError::Fem)?;
                    let mut geom = vec![tri[0], tri[1], tri[2]];
                    for ed in conn.tri_edges[le] {
                        geom.push(n_vert + ed);
                    }
                    let dofs: Vec<usize> =
                        geom.iter().flat_map(|&g| [2 * g, 2 * g + 1]).collect();
                    for p in 0..12 {
                        for q in p..12 {
                            if vel[p][q] != 0.0 {
                                a_trips.push((dofs[p], dofs[q], vel[p][q]));
                            }
                        }
                    }
                    for a in 0..6 {
                        for b in 0..6 {
                            for c in 0..2 {
                                if a <= b {
                                    s_trips.push((dofs[2 * a + c], dofs[2 * b + c], m2[a][b]));
                                }
                            }
                        }
                    }
                    for pdof in 0..12 {
                        for q in 0..3 {
                            if div[pdof][q] != 0.0 {
                                div_trips.push((tri[q], dofs[pdof], div[pdof][q]));
                            }
                        }
                    }
                    let pm = element_mass(verts).map_err(GmsfemError::Fem)?;
                    for p in 0..3 {
                        for q in p..3 {
                            pmass_trips.push((tri[p], tri[q], pm[p][q]));
                        }
                    }
                }
            }
        }
        let a_loc = SparseSym::from_triplets(ndof, &a_trips)?;
        let s_loc = SparseSym::from_triplets(ndof, &s_trips)?;
        let (divergence, pressure_mass) = if op.is_stokes() {
            (
                Some(CsrMatrix::from_triplets(n_vert, ndof, &div_trips)?),
                Some(SparseSym::from_triplets(n_vert, &pmass_trips)?),
            )
        } else {
            (None, None)
        };

        // field-DOF classification
        let mut boundary_dofs = Vec::new();
        let mut perforation_dofs = Vec::new();
        let bset: std::collections::BTreeSet<usize> = nb.boundary_dofs.iter().copied().collect();
        let pset: std::collections::BTreeSet<usize> =
            nb.perforation_dofs.iter().copied().collect();
        for v in 0..n_vert {
            for c in 0..components {
                if pset.contains(&v) {
                    perforation_dofs.push(v * components + c);
                } else if bset.contains(&v) {
                    boundary_dofs.push(v * components + c);
                }
            }
        }
        if let Some(conn) = &p2 {
            // outline edges: exactly one incident element within the patch
            let mut counts = vec![0usize; conn.edges.len()];
            for te in &conn.tri_edges {
                for &e in te {
                    counts[e] += 1;
                }
            }
            for (ei, &(la, lb)) in conn.edges.iter().enumerate() {
                let (ga, gb) = (nb.local_to_global[la], nb.local_to_global[lb]);
                let geom = n_vert + ei;
                let marker = mesh.boundary_edge_marker(ga, gb);
                if marker == Some(EdgeMarker::Perforation) {
                    for c in 0..components {
                        perforation_dofs.push(geom * components + c);
                    }
                } else if counts[ei] == 1 {
                    for c in 0..components {
                        boundary_dofs.push(geom * components + c);
                    }
                }
            }
        }
        boundary_dofs.sort_unstable();
        perforation_dofs.sort_unstable();

        Ok(LocalOperator {
            op,
            coarse_node: nb.coarse_node,
            a_loc,
            s_loc,
            divergence,
            pressure_mass,
            dof_to_global,
            dof_coords,
            boundary_dofs,
            perforation_dofs,
        })
    }

    pub fn ndof(&self) -> usize {
        self.a_loc.n()
    }

    /// DOFs constrained during local snapshot solves: the outline, plus the
    /// holes under a Dirichlet perforation condition.
    pub fn constrained_dofs(&self) -> Vec<bool> {
        let mut constrained = vec![false; self.ndof()];
        for &d in &self.boundary_dofs {
            constrained[d] = true;
        }
        if self.op.perforation_bc == PerforationBc::Dirichlet {
            for &d in &self.perforation_dofs {
                constrained[d] = true;
            }
        }
        constrained
    }

    /// Free DOFs of the local snapshot space (everything except holes under
    /// a Dirichlet perforation condition).
    pub fn snapshot_free_dofs(&self) -> Vec<usize> {
        let excluded: std::collections::BTreeSet<usize> =
            if self.op.perforation_bc == PerforationBc::Dirichlet {
                self.perforation_dofs.iter().copied().collect()
            } else {
                Default::default()
            };
        (0..self.ndof()).filter(|d| !excluded.contains(d)).collect()
    }
}

/// Factorized local solver for harmonic extensions of boundary data.
pub struct LocalHarmonicSolver<'a> {
    local: &'a LocalOperator,
    constrained: Vec<bool>,
    spd: Option<(SpdFactor, Vec<usize>, Vec<usize>)>, // factor, free list, free_of
    stokes: Option<StokesSolver>,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl<'a> LocalHarmonicSolver<'a> {
    pub fn new(local: &'a LocalOperator) -> Result<Self, GmsfemError> {
        let constrained = local.constrained_dofs();
        let ndof = local.ndof();
        let mut neighbors = vec![Vec::new(); ndof];
        for (i, j, v) in local.a_loc.upper_entries() {
            neighbors[i].push((j, v));
            if i != j {
                neighbors[j].push((i, v));
            }
        }
        if local.op.is_stokes() {
            let solver = StokesSolver::from_parts(
                local.a_loc.clone(),
                local.divergence.clone().unwrap(),
                local.pressure_mass.as_ref().unwrap(),
                constrained.clone(),
            )
            .map_err(local_failure)?;
            Ok(LocalHarmonicSolver {
                local,
                constrained,
                spd: None,
                stokes: Some(solver),
                neighbors,
            })
        } else {
            let free: Vec<usize> = (0..ndof).filter(|&d| !constrained[d]).collect();
            let mut free_of = vec![usize::MAX; ndof];
            for (fi, &d) in free.iter().enumerate() {
                free_of[d] = fi;
            }
            let mut trips = Vec::new();
            for (i, j, v) in local.a_loc.upper_entries() {
                if free_of[i] != usize::MAX && free_of[j] != usize::MAX {
                    trips.push((free_of[i], free_of[j], v));
                }
            }
            let reduced = SparseSym::from_triplets(free.len(), &trips)?;
            let factor = if free.is_empty() {
                None
            } else {
                Some(factor_spd(&reduced).map_err(|e| local_failure(FemError::Linalg(e)))?)
            };
            // a neighborhood with no interior DOFs degenerates to the identity
            let spd = factor.map(|f| (f, free, free_of));
            Ok(LocalHarmonicSolver {
                local,
                constrained,
                spd,
                stokes: None,
                neighbors,
            })
        }
    }

    /// Harmonic extension of prescribed values on the constrained DOFs.
    pub fn extend(&self, boundary_values: &[f64]) -> Result<Vec<f64>, GmsfemError> {
        let ndof = self.local.ndof();
        assert_eq!(boundary_values.len(), ndof);
        if let Some(stokes) = &self.stokes {
            let load = vec![0.0; ndof];
            let (velocity, _pressure) =
                stokes.solve(&load, boundary_values).map_err(local_failure)?;
            Ok(velocity)
        } else {
            let mut out: Vec<f64> = (0..ndof)
                .map(|d| if self.constrained[d] { boundary_values[d] } else { 0.0 })
                .collect();
            if let Some((factor, free, free_of)) = &self.spd {
                let mut rhs = vec![0.0; free.len()];
                for (d, &g) in out.iter().enumerate() {
                    if g == 0.0 {
                        continue;
                    }
                    for &(j, v) in &self.neighbors[d] {
                        if free_of[j] != usize::MAX {
                            rhs[free_of[j]] -= v * g;
                        }
                    }
                }
                let interior = factor.solve(&rhs);
                for (fi, &d) in free.iter().enumerate() {
                    out[d] = interior[fi];
                }
            }
            Ok(out)
        }
    }
}

fn local_failure(e: FemError) -> GmsfemError {
    GmsfemError::SingularLocalSystem(e.to_string())
}

/// Harmonic snapshots: one column per boundary DOF of the neighborhood,
/// extending a unit nodal value on the outline into the interior by the
/// homogeneous local equation.
pub fn snapshot_harmonic(local: &LocalOperator) -> Result<SnapshotSet, GmsfemError> {
    if local.boundary_dofs.is_empty() {
        return Err(GmsfemError::SingularLocalSystem(
            "neighborhood has no boundary DOFs".into(),
        ));
    }
    let solver = LocalHarmonicSolver::new(local)?;
    let ndof = local.ndof();
    let mut columns = DenseMat::zeros(ndof, local.boundary_dofs.len());
    let mut data = vec![0.0; ndof];
    for (k, &b) in local.boundary_dofs.iter().enumerate() {
        data[b] = 1.0;
        let col = solver.extend(&data)?;
        columns.set_col(k, &col);
        data[b] = 0.0;
    }
    Ok(SnapshotSet {
        coarse_node: local.coarse_node,
        columns,
        provenance: Provenance::Harmonic,
    })
}

/// Spectral snapshots: the identity on all free local DOFs, i.e. the full
/// local fine space.
pub fn snapshot_spectral(local: &LocalOperator) -> SnapshotSet {
    let free = local.snapshot_free_dofs();
    let mut columns = DenseMat::zeros(local.ndof(), free.len());
    for (k, &d) in free.iter().enumerate() {
        columns.set(d, k, 1.0);
    }
    SnapshotSet {
        coarse_node: local.coarse_node,
        columns,
        provenance: Provenance::Spectral,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble, BoundaryData};
    use crate::geometry::{Circle, Rect};
    use crate::mesh::{build_coarse_grid, build_domain, build_neighborhood, generate_fine_mesh};

    fn setup(
        op: OperatorKind,
        inclusions: Vec<Circle>,
    ) -> (FineMesh, DofLayout, Vec<Neighborhood>) {
        let domain = build_domain(Rect::unit_square(), inclusions, 16).unwrap();
        let coarse = build_coarse_grid(&domain, 0.25).unwrap();
        let fine = generate_fine_mesh(&domain, &coarse, 0.0625, 20.0).unwrap();
        let bc = match op.components() {
            1 => BoundaryData::scalar_constant(0.0, 0.0),
            _ => BoundaryData::vector_constant([0.0, 0.0], [0.0, 0.0]),
        };
        let layout = assemble(op, &fine, &bc).unwrap().layout;
        let nbs: Vec<Neighborhood> = (0..coarse.n_nodes())
            .map(|i| build_neighborhood(&coarse, &fine, i))
            .collect();
        (fine, layout, nbs)
    }

    #[test]
    fn harmonic_snapshots_sum_to_one_without_holes() {
        let op = OperatorKind::laplace();
        let (fine, layout, nbs) = setup(op, vec![]);
        let nb = &nbs[6]; // interior coarse node (1,1)
        let local = LocalOperator::new(op, &fine, &layout, nb).unwrap();
        let snaps = snapshot_harmonic(&local).unwrap();
        // discrete harmonic extension of constant boundary data is constant
        for d in 0..local.ndof() {
            let sum: f64 = (0..snaps.count()).map(|k| snaps.columns.get(d, k)).sum();
            assert!((sum - 1.0).abs() < 1e-10, "dof {d}: {sum}");
        }
    }

    #[test]
    fn harmonic_snapshots_have_interior_residual_zero() {
        let op = OperatorKind::laplace();
        let (fine, layout, nbs) = setup(op, vec![Circle::new(0.52, 0.47, 0.1)]);
        let nb = &nbs[6];
        let local = LocalOperator::new(op, &fine, &layout, nb).unwrap();
        let snaps = snapshot_harmonic(&local).unwrap();
        let constrained = local.constrained_dofs();
        let scale = local
            .a_loc
            .upper_entries()
            .fold(0.0f64, |m, (_, _, v)| m.max(v.abs()));
        for k in 0..snaps.count() {
            let av = local.a_loc.matvec(snaps.columns.col(k));
            for d in 0..local.ndof() {
                if !constrained[d] {
                    assert!(av[d].abs() <= 1e-9 * scale, "col {k} dof {d}: {}", av[d]);
                }
            }
        }
    }

    #[test]
    fn elasticity_snapshot_count_is_twice_boundary_nodes() {
        let op = OperatorKind::elasticity(1e9, 0.22);
        let (fine, layout, nbs) = setup(op, vec![]);
        let nb = &nbs[6];
        let local = LocalOperator::new(op, &fine, &layout, nb).unwrap();
        let snaps = snapshot_harmonic(&local).unwrap();
        assert_eq!(snaps.count(), 2 * nb.boundary_dofs.len());
    }

    #[test]
    fn spectral_snapshots_are_identity_on_free_dofs() {
        let op = OperatorKind::laplace();
        let (fine, layout, nbs) = setup(op, vec![Circle::new(0.52, 0.47, 0.1)]);
        let nb = &nbs[6];
        let local = LocalOperator::new(op, &fine, &layout, nb).unwrap();
        let snaps = snapshot_spectral(&local);
        let free = local.snapshot_free_dofs();
        assert_eq!(snaps.count(), free.len());
        for (k, &d) in free.iter().enumerate() {
            for r in 0..local.ndof() {
                let expect = if r == d { 1.0 } else { 0.0 };
                assert_eq!(snaps.columns.get(r, k), expect);
            }
        }
    }

    #[test]
    fn stokes_harmonic_snapshots_satisfy_interior_momentum() {
        let op = OperatorKind::stokes(1.0);
        let (fine, layout, nbs) = setup(op, vec![]);
        let nb = &nbs[6];
        let local = LocalOperator::new(op, &fine, &layout, nb).unwrap();
        let solver = LocalHarmonicSolver::new(&local).unwrap();
        let stokes = solver.stokes.as_ref().unwrap();
        // one representative boundary delta
        let mut data = vec![0.0; local.ndof()];
        data[local.boundary_dofs[3]] = 1.0;
        let load = vec![0.0; local.ndof()];
        let (velocity, pressure) = stokes.solve(&load, &data).unwrap();
        let constrained = local.constrained_dofs();
        let av = local.a_loc.matvec(&velocity);
        let btp = local.divergence.as_ref().unwrap().transpose_matvec(&pressure);
        let scale = crate::linalg::norm2(&av).max(1.0);
        for d in 0..local.ndof() {
            if !constrained[d] {
                let r = av[d] - btp[d];
                assert!(r.abs() <= 1e-9 * scale, "dof {d}: {r}");
            }
        }
    }
}

//! Global assembly with symmetric Dirichlet elimination, the SPD solve path
//! for Laplace/elasticity, and a Schur-complement solver for Stokes.

use super::elements::{
    element_elasticity, element_laplace, element_mass, element_p2_mass, element_stokes,
    p2_connectivity, p2_values, P2Connectivity, MIDPOINT_RULE, TRI_QUAD_DEG5,
};
use super::{
    BcValue, BoundaryData, FemError, FieldValue, OperatorKind, PdeKind, PerforationBc, Solution,
};
use crate::geometry::Point;
use crate::linalg::{factor_spd, CsrMatrix, LinalgError, SparseSym, SpdFactor};
use crate::mesh::{FineMesh, NodeMarker};

/// Geometric DOF layout of the primary field: mesh vertices, plus edge
/// midpoints for the quadratic Stokes velocity. A field DOF is
/// `geom * components + component`.
#[derive(Debug, Clone)]
pub struct DofLayout {
    pub components: usize,
    pub n_vertices: usize,
    pub p2: Option<P2Connectivity>,
    pub coords: Vec<Point>,
    pub geom_markers: Vec<NodeMarker>,
}

impl DofLayout {
    pub fn build(op: OperatorKind, mesh: &FineMesh) -> DofLayout {
        let components = op.components();
        let mut coords = mesh.nodes.clone();
        let mut geom_markers = mesh.node_markers.clone();
        let p2 = if op.is_stokes() {
            let conn = p2_connectivity(&mesh.triangles);
            for &(a, b) in &conn.edges {
                let pa = mesh.nodes[a];
                let pb = mesh.nodes[b];
                coords.push(Point::new(0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)));
                let marker = match mesh.boundary_edge_marker(a, b) {
                    Some(crate::mesh::EdgeMarker::Outer) => NodeMarker::Outer,
                    Some(crate::mesh::EdgeMarker::Perforation) => NodeMarker::Perforation,
                    None => NodeMarker::Interior,
                };
                geom_markers.push(marker);
            }
            Some(conn)
        } else {
            None
        };
        DofLayout {
            components,
            n_vertices: mesh.n_nodes(),
            p2,
            coords,
            geom_markers,
        }
    }

    pub fn n_geom(&self) -> usize {
        self.coords.len()
    }

    pub fn ndof(&self) -> usize {
        self.n_geom() * self.components
    }

    #[inline]
    pub fn dof(&self, geom: usize, comp: usize) -> usize {
        geom * self.components + comp
    }

    /// Geometric nodes of one element in local order (vertices, then P2
    /// edge midpoints when present).
    pub fn element_geom(&self, mesh: &FineMesh, tri: usize) -> Vec<usize> {
        let t = mesh.triangles[tri];
        let mut geom = vec![t[0], t[1], t[2]];
        if let Some(p2) = &self.p2 {
            for e in p2.tri_edges[tri] {
                geom.push(self.n_vertices + e);
            }
        }
        geom
    }
}

/// Assembled fine-grid system. The stiffness and mass operators are stored
/// without boundary elimination; the Dirichlet set is recorded separately
/// and eliminated when solving.
#[derive(Debug, Clone)]
pub struct FineSystem {
    pub op: OperatorKind,
    pub layout: DofLayout,
    pub stiffness: SparseSym,
    pub mass: SparseSym,
    pub load: Vec<f64>,
    pub dirichlet: Vec<Option<f64>>,
    pub divergence: Option<CsrMatrix>,
    pub pressure_mass: Option<SparseSym>,
}

impl FineSystem {
    pub fn ndof(&self) -> usize {
        self.layout.ndof()
    }

    pub fn free_dofs(&self) -> Vec<usize> {
        (0..self.ndof()).filter(|&d| self.dirichlet[d].is_none()).collect()
    }

    pub fn n_free(&self) -> usize {
        self.dirichlet.iter().filter(|d| d.is_none()).count()
    }

    /// Dirichlet lift: prescribed values at constrained DOFs, zero elsewhere.
    pub fn lift_vector(&self) -> Vec<f64> {
        self.dirichlet.iter().map(|d| d.unwrap_or(0.0)).collect()
    }

    /// Reduced SPD system on the free DOFs with the Dirichlet load lift
    /// applied. Returns (matrix, rhs, free-DOF list).
    pub fn reduced_spd(&self) -> Result<(SparseSym, Vec<f64>, Vec<usize>), FemError> {
        let free = self.free_dofs();
        let mut free_of = vec![None; self.ndof()];
        for (fi, &d) in free.iter().enumerate() {
            free_of[d] = Some(fi);
        }
        let mut rhs: Vec<f64> = free.iter().map(|&d| self.load[d]).collect();
        let mut triplets = Vec::with_capacity(self.stiffness.nnz_upper());
        for (i, j, v) in self.stiffness.upper_entries() {
            match (free_of[i], free_of[j]) {
                (Some(fi), Some(fj)) => triplets.push((fi, fj, v)),
                (Some(fi), None) => rhs[fi] -= v * self.dirichlet[j].unwrap(),
                (None, Some(fj)) => rhs[fj] -= v * self.dirichlet[i].unwrap(),
                (None, None) => {}
            }
        }
        let reduced = SparseSym::from_triplets(free.len(), &triplets)?;
        Ok((reduced, rhs, free))
    }
}

fn bc_components(v: &BcValue) -> usize {
    match v {
        BcValue::Scalar(_) => 1,
        BcValue::Vector(_) => 2,
    }
}

fn load_components(v: &FieldValue) -> usize {
    match v {
        FieldValue::Scalar(_) => 1,
        FieldValue::Vector(_) => 2,
    }
}

fn bc_component(v: &BcValue, c: usize) -> Option<f64> {
    match v {
        BcValue::Scalar(s) => *s,
        BcValue::Vector(vv) => vv[c],
    }
}

fn load_component(v: &FieldValue, c: usize) -> f64 {
    match v {
        FieldValue::Scalar(s) => *s,
        FieldValue::Vector(vv) => vv[c],
    }
}

/// Emit the upper triangle of a symmetric element matrix onto global DOFs.
fn scatter_sym(triplets: &mut Vec<(usize, usize, f64)>, dofs: &[usize], elem: &[&[f64]]) {
    for p in 0..dofs.len() {
        for q in p..dofs.len() {
            let v = elem[p][q];
            if v != 0.0 {
                triplets.push((dofs[p], dofs[q], v));
            }
        }
    }
}

pub fn assemble(
    op: OperatorKind,
    mesh: &FineMesh,
    bc: &BoundaryData,
) -> Result<FineSystem, FemError> {
    op.validate()?;
    let layout = DofLayout::build(op, mesh);
    let probe = mesh.nodes[0];
    if bc_components(&(bc.outer)(probe)) != op.components() {
        return Err(FemError::InconsistentBC(format!(
            "boundary data arity does not match a {}-component operator",
            op.components()
        )));
    }
    if load_components(&(bc.load)(probe)) != op.components() {
        return Err(FemError::InconsistentBC(
            "load arity does not match the operator".into(),
        ));
    }

    let ndof = layout.ndof();
    let mut stiff_trips = Vec::new();
    let mut mass_trips = Vec::new();
    let mut div_trips = Vec::new();
    let mut pmass_trips = Vec::new();
    let mut load = vec![0.0; ndof];

    for t in 0..mesh.n_triangles() {
        let verts = mesh.vertices(t);
        let geom = layout.element_geom(mesh, t);
        match op.variant {
            PdeKind::Laplace => {
                let k = element_laplace(verts)?;
                let m = element_mass(verts)?;
                let dofs: Vec<usize> = geom.iter().map(|&g| layout.dof(g, 0)).collect();
                let kr: Vec<&[f64]> = k.iter().map(|r| r.as_slice()).collect();
                let mr: Vec<&[f64]> = m.iter().map(|r| r.as_slice()).collect();
                scatter_sym(&mut stiff_trips, &dofs, &kr);
                scatter_sym(&mut mass_trips, &dofs, &mr);
                element_load_p1(&layout, &verts, &geom, bc, &mut load);
            }
            PdeKind::Elasticity { .. } => {
                let lame = op.lame().unwrap();
                let k = element_elasticity(verts, lame)?;
                let m = element_mass(verts)?;
                let dofs: Vec<usize> = geom
                    .iter()
                    .flat_map(|&g| [layout.dof(g, 0), layout.dof(g, 1)])
                    .collect();
                let kr: Vec<&[f64]> = k.iter().map(|r| r.as_slice()).collect();
                scatter_sym(&mut stiff_trips, &dofs, &kr);
                // component-wise vector mass
                for c in 0..2 {
                    let cd: Vec<usize> = geom.iter().map(|&g| layout.dof(g, c)).collect();
                    let mr: Vec<&[f64]> = m.iter().map(|r| r.as_slice()).collect();
                    scatter_sym(&mut mass_trips, &cd, &mr);
                }
                element_load_p1(&layout, &verts, &geom, bc, &mut load);
            }
            PdeKind::Stokes { mu } => {
                let (vel, div) = element_stokes(verts)?;
                let m = element_p2_mass(verts)?;
                let dofs: Vec<usize> = geom
                    .iter()
                    .flat_map(|&g| [layout.dof(g, 0), layout.dof(g, 1)])
                    .collect();
                for p in 0..12 {
                    for q in p..12 {
                        let v = vel[p][q];
                        if v != 0.0 {
                            stiff_trips.push((dofs[p], dofs[q], mu * v));
                        }
                    }
                }
                for c in 0..2 {
                    let cd: Vec<usize> = geom.iter().map(|&g| layout.dof(g, c)).collect();
                    let mr: Vec<&[f64]> = m.iter().map(|r| r.as_slice()).collect();
                    scatter_sym(&mut mass_trips, &cd, &mr);
                }
                let tri = mesh.triangles[t];
                for p in 0..12 {
                    for (ql, &qv) in tri.iter().enumerate() {
                        let v = div[p][ql];
                        if v != 0.0 {
                            div_trips.push((qv, dofs[p], v));
                        }
                    }
                }
                let pm = element_mass(verts)?;
                let pr: Vec<&[f64]> = pm.iter().map(|r| r.as_slice()).collect();
                let pdofs: Vec<usize> = tri.to_vec();
                scatter_sym(&mut pmass_trips, &pdofs, &pr);
                element_load_p2(&layout, &verts, &geom, bc, &mut load);
            }
        }
    }

    let stiffness = SparseSym::from_triplets(ndof, &stiff_trips)?;
    let mass = SparseSym::from_triplets(ndof, &mass_trips)?;
    let (divergence, pressure_mass) = if op.is_stokes() {
        (
            Some(CsrMatrix::from_triplets(mesh.n_nodes(), ndof, &div_trips)?),
            Some(SparseSym::from_triplets(mesh.n_nodes(), &pmass_trips)?),
        )
    } else {
        (None, None)
    };

    // Dirichlet constraints: outer data wins over perforation conditions
    let mut dirichlet = vec![None; ndof];
    for g in 0..layout.n_geom() {
        let p = layout.coords[g];
        match layout.geom_markers[g] {
            NodeMarker::Outer => {
                let value = (bc.outer)(p);
                for c in 0..layout.components {
                    if let Some(v) = bc_component(&value, c) {
                        dirichlet[layout.dof(g, c)] = Some(v);
                    }
                }
            }
            NodeMarker::Perforation => {
                if op.perforation_bc == PerforationBc::Dirichlet {
                    for c in 0..layout.components {
                        dirichlet[layout.dof(g, c)] = Some(0.0);
                    }
                }
            }
            NodeMarker::Interior => {}
        }
    }

    Ok(FineSystem {
        op,
        layout,
        stiffness,
        mass,
        load,
        dirichlet,
        divergence,
        pressure_mass,
    })
}

fn element_load_p1(
    layout: &DofLayout,
    verts: &[Point; 3],
    geom: &[usize],
    bc: &BoundaryData,
    load: &mut [f64],
) {
    let area = crate::geometry::triangle_area(verts[0], verts[1], verts[2]);
    for (l, w) in MIDPOINT_RULE {
        let x = Point::new(
            l[0] * verts[0].x + l[1] * verts[1].x + l[2] * verts[2].x,
            l[0] * verts[0].y + l[1] * verts[1].y + l[2] * verts[2].y,
        );
        let f = (bc.load)(x);
        for (a, &g) in geom.iter().enumerate() {
            for c in 0..layout.components {
                load[layout.dof(g, c)] += w * area * l[a] * load_component(&f, c);
            }
        }
    }
}

fn element_load_p2(
    layout: &DofLayout,
    verts: &[Point; 3],
    geom: &[usize],
    bc: &BoundaryData,
    load: &mut [f64],
) {
    let area = crate::geometry::triangle_area(verts[0], verts[1], verts[2]);
    for (l, w) in TRI_QUAD_DEG5 {
        let x = Point::new(
            l[0] * verts[0].x + l[1] * verts[1].x + l[2] * verts[2].x,
            l[0] * verts[0].y + l[1] * verts[1].y + l[2] * verts[2].y,
        );
        let f = (bc.load)(x);
        let vals = p2_values(l);
        for (a, &g) in geom.iter().enumerate() {
            for c in 0..layout.components {
                load[layout.dof(g, c)] += w * area * vals[a] * load_component(&f, c);
            }
        }
    }
}

pub fn fine_solve(system: &FineSystem) -> Result<Solution, FemError> {
    if system.op.is_stokes() {
        let solver = StokesSolver::new(system)?;
        let lift = system.lift_vector();
        let (values, pressure) = solver.solve(&system.load, &lift)?;
        Ok(Solution {
            op: system.op,
            values,
            pressure: Some(pressure),
        })
    } else {
        let (reduced, rhs, free) = system.reduced_spd()?;
        let factor = factor_spd(&reduced).map_err(spd_failure)?;
        let mut xf = factor.solve(&rhs);
        refine_once(&reduced, &rhs, &mut xf, &factor);
        let rnorm = residual_norm(&reduced, &xf, &rhs);
        let scale = crate::linalg::norm2(&rhs).max(1e-300);
        if rnorm > 1e-9 * scale {
            return Err(FemError::SingularMatrix(format!(
                "discrete residual {rnorm:.3e} exceeds 1e-9 relative"
            )));
        }
        let mut values = system.lift_vector();
        for (fi, &d) in free.iter().enumerate() {
            values[d] = xf[fi];
        }
        Ok(Solution {
            op: system.op,
            values,
            pressure: None,
        })
    }
}

/// Assemble and solve in one step.
pub fn fine_solve_on(
    op: OperatorKind,
    mesh: &FineMesh,
    bc: &BoundaryData,
) -> Result<(FineSystem, Solution), FemError> {
    let system = assemble(op, mesh, bc)?;
    let solution = fine_solve(&system)?;
    Ok((system, solution))
}

fn spd_failure(e: LinalgError) -> FemError {
    match e {
        LinalgError::NotPositiveDefinite { pivot } => FemError::SingularMatrix(format!(
            "stiffness is singular or indefinite at pivot {pivot} (missing essential boundary conditions?)"
        )),
        other => FemError::Linalg(other),
    }
}

fn refine_once(a: &SparseSym, b: &[f64], x: &mut [f64], factor: &SpdFactor) {
    let r: Vec<f64> = a.matvec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
    let c = factor.solve(&r);
    for (xi, ci) in x.iter_mut().zip(&c) {
        *xi += ci;
    }
}

fn residual_norm(a: &SparseSym, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    ax.iter()
        .zip(b)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt()
}

/// Schur-complement Stokes solver: direct Cholesky on the velocity block,
/// preconditioned CG on the pressure Schur complement. The factorization
/// depends only on which velocity DOFs are constrained, so one solver
/// instance serves many boundary-data vectors.
pub struct StokesSolver {
    stiffness: SparseSym,
    divergence: CsrMatrix,
    constrained: Vec<bool>,
    free: Vec<usize>,
    factor: SpdFactor,
    b_free: CsrMatrix,
    weights: Vec<f64>,
    lumped_inv: Vec<f64>,
    total_weight: f64,
    gauged: bool,
}

impl StokesSolver {
    pub fn new(system: &FineSystem) -> Result<Self, FemError> {
        let divergence = system
            .divergence
            .clone()
            .ok_or_else(|| FemError::InvalidOperator("not a Stokes system".into()))?;
        let pressure_mass = system.pressure_mass.as_ref().unwrap();
        let constrained: Vec<bool> = system.dirichlet.iter().map(|d| d.is_some()).collect();
        Self::from_parts(system.stiffness.clone(), divergence, pressure_mass, constrained)
    }

    pub fn from_parts(
        stiffness: SparseSym,
        divergence: CsrMatrix,
        pressure_mass: &SparseSym,
        constrained: Vec<bool>,
    ) -> Result<Self, FemError> {
        let ndof = stiffness.n();
        assert_eq!(constrained.len(), ndof);
        let free: Vec<usize> = (0..ndof).filter(|&d| !constrained[d]).collect();
        let mut free_of = vec![usize::MAX; ndof];
        for (fi, &d) in free.iter().enumerate() {
            free_of[d] = fi;
        }
        let mut a_trips = Vec::new();
        for (i, j, v) in stiffness.upper_entries() {
            if free_of[i] != usize::MAX && free_of[j] != usize::MAX {
                a_trips.push((free_of[i], free_of[j], v));
            }
        }
        let a_ff = SparseSym::from_triplets(free.len(), &a_trips)?;
        let factor = factor_spd(&a_ff).map_err(spd_failure)?;

        let n_p = divergence.rows();
        let mut b_trips = Vec::new();
        for r in 0..n_p {
            for (c, v) in divergence.row(r) {
                if free_of[c] != usize::MAX {
                    b_trips.push((r, free_of[c], v));
                }
            }
        }
        let b_free = CsrMatrix::from_triplets(n_p, free.len(), &b_trips)?;

        // lumped pressure mass: row sums of the P1 mass = ∫ φ_l
        let ones = vec![1.0; n_p];
        let weights = pressure_mass.matvec(&ones);
        let total_weight: f64 = weights.iter().sum();
        let lumped_inv: Vec<f64> = weights.iter().map(|&w| 1.0 / w).collect();

        // a constant-pressure null space exists when Bᵀ·1 vanishes on the
        // free velocity DOFs (fully constrained velocity boundary)
        let bt1 = b_free.transpose_matvec(&ones);
        let bscale = b_free
            .row(0)
            .map(|(_, v)| v.abs())
            .fold(1e-300, f64::max)
            .max(1e-12);
        let gauged = crate::linalg::norm2(&bt1) <= 1e-10 * bscale * (n_p as f64).sqrt();

        Ok(StokesSolver {
            stiffness,
            divergence,
            constrained,
            free,
            factor,
            b_free,
            weights,
            lumped_inv,
            total_weight,
            gauged,
        })
    }

    pub fn gauged(&self) -> bool {
        self.gauged
    }

    /// Solve with the given volume load and Dirichlet values (read at the
    /// constrained DOFs of the full-length vector). Returns the velocity on
    /// all DOFs and the mean-zero nodal pressure.
    pub fn solve(&self, load: &[f64], dirichlet_values: &[f64]) -> Result<(Vec<f64>, Vec<f64>), FemError> {
        let ndof = self.stiffness.n();
        assert_eq!(load.len(), ndof);
        assert_eq!(dirichlet_values.len(), ndof);
        let lift: Vec<f64> = (0..ndof)
            .map(|d| if self.constrained[d] { dirichlet_values[d] } else { 0.0 })
            .collect();
        let a_lift = self.stiffness.matvec(&lift);
        let rhs_v: Vec<f64> = self
            .free
            .iter()
            .map(|&d| load[d] - a_lift[d])
            .collect();
        let g_p: Vec<f64> = self.divergence.matvec(&lift).iter().map(|v| -v).collect();

        let t = self.factor.solve(&rhs_v);
        let bt = self.b_free.matvec(&t);
        let mut rhs_p: Vec<f64> = g_p.iter().zip(&bt).map(|(g, b)| g - b).collect();
        if self.gauged {
            project_mean(&mut rhs_p);
        }

        let p = self.schur_cg(&rhs_p)?;

        // velocity recovery: A_ff u_f = rhs_v + B_fᵀ p
        let btp = self.b_free.transpose_matvec(&p);
        let full_rhs: Vec<f64> = rhs_v.iter().zip(&btp).map(|(a, b)| a + b).collect();
        let u_f = self.factor.solve(&full_rhs);

        let mut velocity = lift;
        for (fi, &d) in self.free.iter().enumerate() {
            velocity[d] = u_f[fi];
        }

        // mass-weighted zero mean; only a gauge freedom when the velocity
        // boundary is fully constrained
        let mut pressure = p;
        if self.gauged {
            let mean = crate::linalg::dot(&self.weights, &pressure) / self.total_weight;
            for v in &mut pressure {
                *v -= mean;
            }
        }

        // residual verification on the full saddle system
        let scale = crate::linalg::norm2(&rhs_v)
            .max(crate::linalg::norm2(&g_p))
            .max(1e-300);
        let mom = {
            let au = self.stiffness.matvec(&velocity);
            let btp_full = self.divergence.transpose_matvec(&pressure);
            let mut worst2 = 0.0;
            for &d in &self.free {
                let r = au[d] - btp_full[d] - load[d];
                worst2 += r * r;
            }
            worst2.sqrt()
        };
        let cont = {
            let bu = self.divergence.matvec(&velocity);
            let mut r2 = 0.0;
            let mean_flux: f64 = if self.gauged {
                bu.iter().sum::<f64>() / bu.len() as f64
            } else {
                0.0
            };
            for v in &bu {
                let r = v - mean_flux;
                r2 += r * r;
            }
            r2.sqrt()
        };
        if mom > 1e-9 * scale || cont > 1e-9 * scale {
            return Err(FemError::SingularMatrix(format!(
                "saddle residuals too large: momentum {mom:.3e}, continuity {cont:.3e}"
            )));
        }
        Ok((velocity, pressure))
    }

    /// Preconditioned CG on S = B A⁻¹ Bᵀ with the lumped pressure mass.
    fn schur_cg(&self, rhs: &[f64]) -> Result<Vec<f64>, FemError> {
        let n = rhs.len();
        let mut p = vec![0.0; n];
        let mut r = rhs.to_vec();
        let rhs_norm = crate::linalg::norm2(rhs).max(1e-300);
        let tol = 1e-12 * rhs_norm;
        if rhs_norm <= 1e-300 {
            return Ok(p);
        }
        let precond = |r: &[f64], gauged: bool| {
            let mut z: Vec<f64> = r.iter().zip(&self.lumped_inv).map(|(a, b)| a * b).collect();
            if gauged {
                project_mean(&mut z);
            }
            z
        };
        let mut z = precond(&r, self.gauged);
        let mut rho = crate::linalg::dot(&r, &z);
        let mut d = z.clone();
        let max_iter = 40 * n + 200;
        for _ in 0..max_iter {
            if crate::linalg::norm2(&r) <= tol {
                return Ok(p);
            }
            // q = S d
            let btd = self.b_free.transpose_matvec(&d);
            let aid = self.factor.solve(&btd);
            let mut q = self.b_free.matvec(&aid);
            if self.gauged {
                project_mean(&mut q);
            }
            let dq = crate::linalg::dot(&d, &q);
            if dq <= 0.0 {
                return Err(FemError::SingularMatrix(
                    "pressure Schur complement is not positive definite".into(),
                ));
            }
            let alpha = rho / dq;
            crate::linalg::axpy(&mut p, alpha, &d);
            crate::linalg::axpy(&mut r, -alpha, &q);
            z = precond(&r, self.gauged);
            let rho_new = crate::linalg::dot(&r, &z);
            let beta = rho_new / rho;
            rho = rho_new;
            for i in 0..n {
                d[i] = z[i] + beta * d[i];
            }
        }
        if crate::linalg::norm2(&r) <= tol * 100.0 {
            Ok(p)
        } else {
            Err(FemError::SingularMatrix(
                "pressure solve did not converge".into(),
            ))
        }
    }
}

fn project_mean(v: &mut [f64]) {
    let mean: f64 = v.iter().sum::<f64>() / v.len() as f64;
    for x in v {
        *x -= mean;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::BoundaryData;
    use crate::geometry::{Circle, Rect};
    use crate::mesh::{build_coarse_grid, build_domain, generate_fine_mesh};

    fn square_mesh(inclusions: Vec<Circle>, h_coarse: f64, h_fine: f64) -> FineMesh {
        let domain = build_domain(Rect::unit_square(), inclusions, 16).unwrap();
        let coarse = build_coarse_grid(&domain, h_coarse).unwrap();
        generate_fine_mesh(&domain, &coarse, h_fine, 20.0).unwrap()
    }

    #[test]
    fn laplace_constant_boundary_gives_constant_solution() {
        let mesh = square_mesh(vec![], 0.5, 0.125);
        let bc = BoundaryData::scalar_constant(1.0, 0.0);
        let (_, sol) = fine_solve_on(OperatorKind::laplace(), &mesh, &bc).unwrap();
        for v in &sol.values {
            assert!((v - 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn laplace_reproduces_linear_fields() {
        let mesh = square_mesh(vec![], 0.5, 0.1);
        let bc = BoundaryData::scalar_fn(|p| p.x, |_| 0.0);
        let (sys, sol) = fine_solve_on(OperatorKind::laplace(), &mesh, &bc).unwrap();
        for (i, p) in mesh.nodes.iter().enumerate() {
            assert!((sol.values[sys.layout.dof(i, 0)] - p.x).abs() < 1e-10);
        }
    }

    #[test]
    fn laplace_pure_neumann_is_singular() {
        let mesh = square_mesh(vec![], 0.5, 0.125);
        let bc = BoundaryData {
            outer: std::sync::Arc::new(|_| BcValue::Scalar(None)),
            load: std::sync::Arc::new(|_| FieldValue::Scalar(1.0)),
        };
        let (_, err) = match fine_solve_on(OperatorKind::laplace(), &mesh, &bc) {
            Err(e) => ((), e),
            Ok(_) => panic!("expected singular system"),
        };
        assert!(matches!(err, FemError::SingularMatrix(_)));
    }

    #[test]
    fn vector_data_on_scalar_operator_rejected() {
        let mesh = square_mesh(vec![], 0.5, 0.125);
        let bc = BoundaryData::vector_constant([1.0, 0.0], [0.0, 0.0]);
        assert!(matches!(
            assemble(OperatorKind::laplace(), &mesh, &bc),
            Err(FemError::InconsistentBC(_))
        ));
    }

    #[test]
    fn elasticity_zero_data_zero_solution() {
        let mesh = square_mesh(vec![], 0.5, 0.125);
        let bc = BoundaryData::vector_constant([0.0, 0.0], [0.0, 0.0]);
        let (_, sol) = fine_solve_on(OperatorKind::elasticity(1e9, 0.22), &mesh, &bc).unwrap();
        for v in &sol.values {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn elasticity_reproduces_linear_displacements() {
        let mesh = square_mesh(vec![], 0.5, 0.1);
        let linear = |p: crate::geometry::Point| [0.3 * p.x + 0.1 * p.y, -0.2 * p.x + 0.4 * p.y];
        let bc = BoundaryData::vector_fn(
            move |p| {
                let v = linear(p);
                [Some(v[0]), Some(v[1])]
            },
            |_| [0.0, 0.0],
        );
        let (sys, sol) = fine_solve_on(OperatorKind::elasticity(10.0, 0.3), &mesh, &bc).unwrap();
        for (i, p) in mesh.nodes.iter().enumerate() {
            let expect = linear(*p);
            for c in 0..2 {
                assert!((sol.values[sys.layout.dof(i, c)] - expect[c]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn elasticity_energy_positive_on_free_directions() {
        let mesh = square_mesh(vec![Circle::new(0.52, 0.48, 0.15)], 0.5, 0.1);
        let bc = BoundaryData::vector_constant([0.0, 0.0], [0.0, 0.0]);
        let sys = assemble(OperatorKind::elasticity(1e9, 0.22), &mesh, &bc).unwrap();
        let free = sys.free_dofs();
        assert!(!free.is_empty());
        let mut seed = 77u64;
        let mut rnd = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 33) as f64) / (u32::MAX as f64) - 0.5
        };
        for _ in 0..100 {
            let mut v = vec![0.0; sys.ndof()];
            for &d in &free {
                v[d] = rnd();
            }
            assert!(sys.stiffness.quad_form(&v, &v) > 0.0);
        }
    }

    #[test]
    fn laplace_discrete_maximum_principle() {
        let mesh = square_mesh(vec![Circle::new(0.45, 0.55, 0.09)], 0.2, 0.05);
        let bc = BoundaryData::scalar_constant(1.0, 0.0);
        let (sys, sol) = fine_solve_on(OperatorKind::laplace(), &mesh, &bc).unwrap();
        let mut min_v = f64::INFINITY;
        let mut max_v = f64::NEG_INFINITY;
        let mut bmin = f64::INFINITY;
        let mut bmax = f64::NEG_INFINITY;
        for d in 0..sys.ndof() {
            let v = sol.values[d];
            min_v = min_v.min(v);
            max_v = max_v.max(v);
            if sys.dirichlet[d].is_some() {
                bmin = bmin.min(v);
                bmax = bmax.max(v);
            }
        }
        assert!(min_v >= bmin - 1e-12, "{min_v} vs boundary {bmin}");
        assert!(max_v <= bmax + 1e-12, "{max_v} vs boundary {bmax}");
        assert!(min_v >= -1e-12 && max_v <= 1.0 + 1e-12);
    }

    #[test]
    fn stokes_constant_pressure_in_nullspace_of_free_rows() {
        let mesh = square_mesh(vec![], 0.5, 0.125);
        let bc = BoundaryData::vector_constant([1.0, 0.0], [0.0, 0.0]);
        let sys = assemble(OperatorKind::stokes(1.0), &mesh, &bc).unwrap();
        let b = sys.divergence.as_ref().unwrap();
        let ones = vec![1.0; b.rows()];
        let bt1 = b.transpose_matvec(&ones);
        for d in 0..sys.ndof() {
            if sys.dirichlet[d].is_none() {
                assert!(bt1[d].abs() < 1e-13, "dof {d}: {}", bt1[d]);
            }
        }
    }

    #[test]
    fn stokes_lid_driven_cavity() {
        let mesh = square_mesh(vec![Circle::new(0.45, 0.55, 0.09)], 0.2, 0.07);
        let bc = BoundaryData::vector_constant([1.0, 0.0], [0.0, 0.0]);
        let (sys, sol) = fine_solve_on(OperatorKind::stokes(1.0), &mesh, &bc).unwrap();
        // Dirichlet exactness
        for d in 0..sys.ndof() {
            if let Some(g) = sys.dirichlet[d] {
                assert_eq!(sol.values[d], g);
            }
        }
        // mean-zero pressure in the mass inner product
        let p = sol.pressure.as_ref().unwrap();
        let pm = sys.pressure_mass.as_ref().unwrap();
        let ones = vec![1.0; p.len()];
        let mean = pm.quad_form(&ones, p);
        assert!(mean.abs() < 1e-10, "pressure mean {mean}");
        // weak incompressibility against every pressure test function
        let bu = sys.divergence.as_ref().unwrap().matvec(&sol.values);
        let mean_flux: f64 = bu.iter().sum::<f64>() / bu.len() as f64;
        for v in &bu {
            assert!((v - mean_flux).abs() < 1e-9);
        }
    }
}

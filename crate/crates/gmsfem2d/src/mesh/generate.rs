//! Fine-mesh generation: constrained Delaunay triangulation seeded with the
//! coarse-grid edges and the inclusion polygons, Ruppert-style refinement to
//! the requested size and angle bound, then carving of hole interiors.

use spade::{
    AngleLimit, ConstrainedDelaunayTriangulation, InsertionError, Point2, RefinementParameters,
    Triangulation,
};

use super::coarse::CoarseGrid;
use super::domain::PerforatedDomain;
use super::fine::{BoundaryEdge, EdgeMarker, FineMesh, NodeMarker};
use super::{MeshError, GEOM_TOL};
use crate::geometry::{point_segment_dist, signed_area2, Point};

type Cdt = ConstrainedDelaunayTriangulation<Point2<f64>>;

pub fn generate_fine_mesh(
    domain: &PerforatedDomain,
    coarse: &CoarseGrid,
    h_target: f64,
    min_angle_deg: f64,
) -> Result<FineMesh, MeshError> {
    if !(h_target > 0.0) || h_target >= coarse.h {
        return Err(MeshError::InvalidParameter(format!(
            "h_target {h_target} must be positive and smaller than H {}",
            coarse.h
        )));
    }
    if !(min_angle_deg > 0.0) || min_angle_deg > 30.0 {
        return Err(MeshError::InvalidParameter(format!(
            "minimum angle {min_angle_deg} must lie in (0, 30] degrees"
        )));
    }

    let segments = coarse_segments(coarse);
    check_tangency(domain, &segments)?;

    let mut cdt = Cdt::new();
    let insert = |cdt: &mut Cdt, p: Point| -> Result<spade::handles::FixedVertexHandle, MeshError> {
        cdt.insert(Point2::new(p.x, p.y))
            .map_err(|e: InsertionError| MeshError::RefinementFailure(format!("{e:?}")))
    };

    // coarse skeleton first, then hole polygons; constraints are split at
    // mutual intersections
    for &(a, b) in &segments {
        let va = insert(&mut cdt, a)?;
        let vb = insert(&mut cdt, b)?;
        cdt.add_constraint_and_split(va, vb, |v| v);
    }
    for poly in domain.polygons() {
        let n = poly.len();
        for i in 0..n {
            let va = insert(&mut cdt, poly[i])?;
            let vb = insert(&mut cdt, poly[(i + 1) % n])?;
            cdt.add_constraint_and_split(va, vb, |v| v);
        }
    }

    // refinement: target area ~ h^2 / 2 (right-isoceles triangle with legs h)
    let max_area = 0.5 * h_target * h_target;
    let budget = ((domain.bbox.area() / max_area) as usize) * 40 + 10_000;
    let params = RefinementParameters::<f64>::new()
        .with_angle_limit(AngleLimit::from_deg(min_angle_deg))
        .with_max_allowed_area(max_area)
        .with_max_additional_vertices(budget);
    let outcome = cdt.refine(params);
    if !outcome.refinement_complete {
        return Err(MeshError::RefinementFailure(format!(
            "vertex budget {budget} exhausted before meeting the {min_angle_deg} degree bound"
        )));
    }

    extract(domain, coarse, &cdt)
}

/// All coarse-triangle edges as unique segments (grid lines and diagonals).
fn coarse_segments(coarse: &CoarseGrid) -> Vec<(Point, Point)> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for tri in &coarse.triangles {
        for k in 0..3 {
            let a = tri[k];
            let b = tri[(k + 1) % 3];
            let key = (a.min(b), a.max(b));
            if seen.insert(key) {
                out.push((coarse.nodes[key.0], coarse.nodes[key.1]));
            }
        }
    }
    out
}

/// Reject inclusions tangent to a coarse edge; such configurations create
/// arbitrarily thin regions that defeat the angle bound.
fn check_tangency(domain: &PerforatedDomain, segments: &[(Point, Point)]) -> Result<(), MeshError> {
    for (i, c) in domain.inclusions.iter().enumerate() {
        for &(a, b) in segments {
            let d = point_segment_dist(c.center, a, b);
            if (d - c.radius).abs() <= GEOM_TOL {
                return Err(MeshError::RefinementFailure(format!(
                    "inclusion {i} is tangent to a coarse edge"
                )));
            }
        }
    }
    Ok(())
}

fn extract(
    domain: &PerforatedDomain,
    coarse: &CoarseGrid,
    cdt: &Cdt,
) -> Result<FineMesh, MeshError> {
    let polygons = domain.polygons();
    let n_raw = cdt.num_vertices();
    let mut raw_nodes = vec![Point::new(0.0, 0.0); n_raw];
    for v in cdt.vertices() {
        let p = v.position();
        raw_nodes[v.fix().index()] = Point::new(p.x, p.y);
    }

    // keep faces whose centroid is outside every hole polygon
    let mut kept: Vec<([usize; 3], usize)> = Vec::new();
    for face in cdt.inner_faces() {
        let [va, vb, vc] = face.vertices();
        let mut tri = [va.fix().index(), vb.fix().index(), vc.fix().index()];
        let centroid = crate::geometry::triangle_centroid(
            raw_nodes[tri[0]],
            raw_nodes[tri[1]],
            raw_nodes[tri[2]],
        );
        if polygons.iter().any(|poly| crate::geometry::point_in_polygon(centroid, poly)) {
            continue;
        }
        if signed_area2(raw_nodes[tri[0]], raw_nodes[tri[1]], raw_nodes[tri[2]]) < 0.0 {
            tri.swap(1, 2);
        }
        let parent = coarse.find_triangle(centroid);
        kept.push((tri, parent));
    }
    kept.sort();

    // compact node numbering over referenced nodes only
    let mut new_index = vec![usize::MAX; n_raw];
    let mut nodes = Vec::new();
    for (tri, _) in &kept {
        for &v in tri {
            if new_index[v] == usize::MAX {
                new_index[v] = usize::MAX - 1; // mark
            }
        }
    }
    for (old, slot) in new_index.iter_mut().enumerate() {
        if *slot == usize::MAX - 1 {
            *slot = nodes.len();
            nodes.push(raw_nodes[old]);
        }
    }
    let triangles: Vec<[usize; 3]> = kept
        .iter()
        .map(|(t, _)| [new_index[t[0]], new_index[t[1]], new_index[t[2]]])
        .collect();
    let coarse_parent: Vec<usize> = kept.iter().map(|&(_, p)| p).collect();

    let mut mesh = FineMesh {
        nodes,
        triangles,
        node_markers: Vec::new(),
        boundary_edges: Vec::new(),
        coarse_parent,
    };
    classify_boundaries(domain, &mut mesh)?;
    Ok(mesh)
}

fn classify_boundaries(domain: &PerforatedDomain, mesh: &mut FineMesh) -> Result<(), MeshError> {
    let mut markers = vec![NodeMarker::Interior; mesh.n_nodes()];
    let mut boundary = Vec::new();
    for (&(a, b), tris) in &mesh.edge_map() {
        match tris.len() {
            2 => {}
            1 => {
                let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
                let on_outer =
                    domain.bbox.on_boundary(pa, GEOM_TOL) && domain.bbox.on_boundary(pb, GEOM_TOL);
                let marker = if on_outer {
                    EdgeMarker::Outer
                } else {
                    EdgeMarker::Perforation
                };
                boundary.push(BoundaryEdge { a, b, marker });
            }
            k => {
                return Err(MeshError::InvalidMesh(format!(
                    "edge ({a},{b}) has {k} incident triangles"
                )))
            }
        }
    }
    for e in &boundary {
        let marker = match e.marker {
            EdgeMarker::Outer => NodeMarker::Outer,
            EdgeMarker::Perforation => NodeMarker::Perforation,
        };
        for v in [e.a, e.b] {
            // outer classification wins at shared nodes
            if markers[v] != NodeMarker::Outer {
                markers[v] = marker;
            }
        }
    }
    // nodes on the outer boundary are outer even if only interior edges touch them
    for (i, &p) in mesh.nodes.iter().enumerate() {
        if domain.bbox.on_boundary(p, GEOM_TOL) {
            markers[i] = NodeMarker::Outer;
        }
    }
    mesh.node_markers = markers;
    mesh.boundary_edges = boundary;
    Ok(())
}

//! Fine triangulation with boundary markers and coarse-parent map.

use std::collections::BTreeMap;

use super::coarse::CoarseGrid;
use super::domain::PerforatedDomain;
use super::{MeshError, GEOM_TOL};
use crate::geometry::{min_angle_deg, point_segment_dist, triangle_area, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeMarker {
    Interior,
    Outer,
    Perforation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeMarker {
    Outer,
    Perforation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub marker: EdgeMarker,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FineMesh {
    pub nodes: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub node_markers: Vec<NodeMarker>,
    /// Boundary edges (a < b), sorted lexicographically.
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Index of the coarse triangle containing each fine triangle.
    pub coarse_parent: Vec<usize>,
}

impl FineMesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self, tri: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[tri];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn area(&self, tri: usize) -> f64 {
        let [a, b, c] = self.vertices(tri);
        triangle_area(a, b, c)
    }

    pub fn centroid(&self, tri: usize) -> Point {
        let [a, b, c] = self.vertices(tri);
        crate::geometry::triangle_centroid(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.area(t)).sum()
    }

    /// Map from undirected edge (a < b) to incident triangle indices.
    pub fn edge_map(&self) -> BTreeMap<(usize, usize), Vec<usize>> {
        let mut map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                map.entry(key).or_default().push(t);
            }
        }
        map
    }

    /// Unique undirected edges (a < b), lexicographically sorted.
    pub fn unique_edges(&self) -> Vec<(usize, usize)> {
        self.edge_map().into_keys().collect()
    }

    pub fn boundary_edge_marker(&self, a: usize, b: usize) -> Option<EdgeMarker> {
        let key = (a.min(b), a.max(b));
        self.boundary_edges
            .binary_search_by(|e| (e.a, e.b).cmp(&key))
            .ok()
            .map(|i| self.boundary_edges[i].marker)
    }

    /// Full geometric validation against the generating domain and grid.
    pub fn validate(
        &self,
        domain: &PerforatedDomain,
        coarse: &CoarseGrid,
        min_angle: f64,
    ) -> Result<(), MeshError> {
        let fail = |msg: String| Err(MeshError::InvalidMesh(msg));

        if self.triangles.len() != self.coarse_parent.len()
            || self.nodes.len() != self.node_markers.len()
        {
            return fail("marker/parent arrays out of sync".into());
        }

        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                if v >= self.nodes.len() {
                    return fail(format!("triangle {t} references missing node {v}"));
                }
            }
            let [a, b, c] = self.vertices(t);
            let area = triangle_area(a, b, c);
            if area <= 0.0 {
                return fail(format!("triangle {t} has nonpositive area {area}"));
            }
            if min_angle_deg(a, b, c) < min_angle - 0.5 {
                return fail(format!(
                    "triangle {t} violates the minimum angle bound {min_angle}"
                ));
            }
            // conformity: triangles never straddle coarse edges
            let parent = self.coarse_parent[t];
            if parent >= coarse.n_triangles() {
                return fail(format!("triangle {t} has invalid coarse parent"));
            }
            for p in [a, b, c] {
                let bary = coarse.barycentric(parent, p);
                for l in bary {
                    if !(-1e-9..=1.0 + 1e-9).contains(&l) {
                        return fail(format!(
                            "triangle {t} leaks outside its coarse parent {parent}"
                        ));
                    }
                }
            }
        }

        // edge conformity: interior edges shared by 2 triangles, boundary by 1
        let edge_map = self.edge_map();
        let mut derived_boundary = Vec::new();
        for (&(a, b), tris) in &edge_map {
            match tris.len() {
                1 => derived_boundary.push((a, b)),
                2 => {}
                k => return fail(format!("edge ({a},{b}) has {k} incident triangles")),
            }
        }
        let recorded: Vec<(usize, usize)> =
            self.boundary_edges.iter().map(|e| (e.a, e.b)).collect();
        if derived_boundary != recorded {
            return fail("boundary edge list disagrees with triangle incidence".into());
        }

        // marker consistency
        let polygons = domain.polygons();
        for e in &self.boundary_edges {
            let (pa, pb) = (self.nodes[e.a], self.nodes[e.b]);
            match e.marker {
                EdgeMarker::Outer => {
                    if !domain.bbox.on_boundary(pa, GEOM_TOL)
                        || !domain.bbox.on_boundary(pb, GEOM_TOL)
                    {
                        return fail(format!("outer edge ({},{}) off the outer boundary", e.a, e.b));
                    }
                }
                EdgeMarker::Perforation => {
                    let on_poly = |p: Point| {
                        polygons.iter().any(|poly| {
                            (0..poly.len()).any(|i| {
                                point_segment_dist(p, poly[i], poly[(i + 1) % poly.len()])
                                    <= GEOM_TOL
                            })
                        })
                    };
                    if !on_poly(pa) || !on_poly(pb) {
                        return fail(format!(
                            "perforation edge ({},{}) off any inclusion polygon",
                            e.a, e.b
                        ));
                    }
                }
            }
        }
        for (i, (&marker, &p)) in self.node_markers.iter().zip(&self.nodes).enumerate() {
            let on_bbox = domain.bbox.on_boundary(p, GEOM_TOL);
            match marker {
                NodeMarker::Outer if !on_bbox => {
                    return fail(format!("node {i} marked outer but off the outer boundary"))
                }
                NodeMarker::Interior if on_bbox => {
                    return fail(format!("node {i} on the outer boundary but marked interior"))
                }
                _ => {}
            }
        }

        // coverage: triangle areas account for the domain minus polygonal holes
        let covered = self.total_area();
        let expected = domain.active_area();
        if (covered - expected).abs() > 1e-10 * expected {
            return fail(format!(
                "coverage defect: meshed {covered}, expected {expected}"
            ));
        }

        Ok(())
    }
}

//! Uniform coarse grid: right-triangle split of a square lattice.

use super::domain::PerforatedDomain;
use super::MeshError;
use crate::geometry::{signed_area2, Point, Rect};

/// Uniform triangulation of the bounding box. Each lattice cell is split
/// along the diagonal from its lower-left to its upper-right corner.
#[derive(Debug, Clone)]
pub struct CoarseGrid {
    pub bbox: Rect,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub nodes: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
}

pub fn build_coarse_grid(domain: &PerforatedDomain, h: f64) -> Result<CoarseGrid, MeshError> {
    let bbox = domain.bbox;
    if !(h > 0.0) {
        return Err(MeshError::NonDivisibleH { h });
    }
    let fx = bbox.width() / h;
    let fy = bbox.height() / h;
    let nx = fx.round() as usize;
    let ny = fy.round() as usize;
    if nx == 0 || ny == 0 || (fx - nx as f64).abs() > 1e-9 || (fy - ny as f64).abs() > 1e-9 {
        return Err(MeshError::NonDivisibleH { h });
    }

    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push(Point::new(
                bbox.min.x + i as f64 * h,
                bbox.min.y + j as f64 * h,
            ));
        }
    }
    let node = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            // lower-right then upper-left, both CCW
            triangles.push([node(i, j), node(i + 1, j), node(i + 1, j + 1)]);
            triangles.push([node(i, j), node(i + 1, j + 1), node(i, j + 1)]);
        }
    }
    Ok(CoarseGrid {
        bbox,
        h,
        nx,
        ny,
        nodes,
        triangles,
    })
}

impl CoarseGrid {
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

    /// Index of the coarse triangle containing `p` (clamped to the grid).
    pub fn find_triangle(&self, p: Point) -> usize {
        let fx = ((p.x - self.bbox.min.x) / self.h).floor();
        let fy = ((p.y - self.bbox.min.y) / self.h).floor();
        let i = (fx.max(0.0) as usize).min(self.nx - 1);
        let j = (fy.max(0.0) as usize).min(self.ny - 1);
        let xi = (p.x - self.bbox.min.x) / self.h - i as f64;
        let eta = (p.y - self.bbox.min.y) / self.h - j as f64;
        let cell = 2 * (j * self.nx + i);
        if xi >= eta {
            cell
        } else {
            cell + 1
        }
    }

    /// Barycentric coordinates of `p` in coarse triangle `tri`.
    pub fn barycentric(&self, tri: usize, p: Point) -> [f64; 3] {
        let [a, b, c] = self.vertices(tri);
        let total = signed_area2(a, b, c);
        [
            signed_area2(p, b, c) / total,
            signed_area2(a, p, c) / total,
            signed_area2(a, b, p) / total,
        ]
    }

    /// P1 hat function of a coarse node, evaluated anywhere in the bbox.
    pub fn hat_value(&self, node: usize, p: Point) -> f64 {
        let tri = self.find_triangle(p);
        let verts = self.triangles[tri];
        let bary = self.barycentric(tri, p);
        for k in 0..3 {
            if verts[k] == node {
                return bary[k].clamp(0.0, 1.0);
            }
        }
        0.0
    }

    /// Coarse triangles that have `node` as a vertex.
    pub fn triangles_at_node(&self, node: usize) -> Vec<usize> {
        self.triangles
            .iter()
            .enumerate()
            .filter(|(_, t)| t.contains(&node))
            .map(|(i, _)| i)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::triangle_area;

    fn unit_domain() -> PerforatedDomain {
        PerforatedDomain::unit_square(vec![], 16).unwrap()
    }

    #[test]
    fn fifth_grid_counts() {
        let g = build_coarse_grid(&unit_domain(), 0.2).unwrap();
        assert_eq!(g.n_triangles(), 50);
        assert_eq!(g.n_nodes(), 36);
    }

    #[test]
    fn trivial_grid_counts() {
        let g = build_coarse_grid(&unit_domain(), 1.0).unwrap();
        assert_eq!(g.n_triangles(), 2);
        assert_eq!(g.n_nodes(), 4);
    }

    #[test]
    fn third_grid_counts() {
        let g = build_coarse_grid(&unit_domain(), 1.0 / 3.0).unwrap();
        assert_eq!(g.n_triangles(), 18);
        assert_eq!(g.n_nodes(), 16);
    }

    #[test]
    fn non_divisible_h_rejected() {
        assert!(matches!(
            build_coarse_grid(&unit_domain(), 0.3),
            Err(MeshError::NonDivisibleH { .. })
        ));
    }

    #[test]
    fn triangles_tile_with_positive_area() {
        let g = build_coarse_grid(&unit_domain(), 0.25).unwrap();
        let mut total = 0.0;
        for t in 0..g.n_triangles() {
            let [a, b, c] = g.vertices(t);
            let area = triangle_area(a, b, c);
            assert!(area > 0.0);
            total += area;
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn point_location_matches_containment() {
        let g = build_coarse_grid(&unit_domain(), 0.2).unwrap();
        let probes = [
            Point::new(0.05, 0.01),
            Point::new(0.01, 0.05),
            Point::new(0.99, 0.99),
            Point::new(0.5, 0.5),
            Point::new(0.31, 0.77),
        ];
        for p in probes {
            let t = g.find_triangle(p);
            let bary = g.barycentric(t, p);
            for l in bary {
                assert!(l >= -1e-12 && l <= 1.0 + 1e-12, "{p:?} {bary:?}");
            }
        }
    }

    #[test]
    fn hat_values_partition_unity() {
        let g = build_coarse_grid(&unit_domain(), 0.2).unwrap();
        let probes = [
            Point::new(0.13, 0.57),
            Point::new(0.5, 0.2),
            Point::new(0.2, 0.2),
            Point::new(0.999, 0.001),
        ];
        for p in probes {
            let s: f64 = (0..g.n_nodes()).map(|n| g.hat_value(n, p)).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        // hat is 1 at its own node, 0 at other nodes
        for n in [0usize, 7, 35] {
            assert!((g.hat_value(n, g.nodes[n]) - 1.0).abs() < 1e-12);
            for m in 0..g.n_nodes() {
                if m != n {
                    assert!(g.hat_value(n, g.nodes[m]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn interior_node_has_six_triangles_corner_fewer() {
        let g = build_coarse_grid(&unit_domain(), 0.2).unwrap();
        let interior = 2 * 6 + 2; // node (2, 2)
        assert_eq!(g.triangles_at_node(interior).len(), 6);
        assert_eq!(g.triangles_at_node(0).len(), 2); // lower-left corner
        assert_eq!(g.triangles_at_node(5).len(), 1); // lower-right corner
    }
}

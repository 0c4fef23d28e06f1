//! Per-element matrices: P1 stiffness/mass for Laplace, P1 plane-strain
//! elasticity, and Taylor-Hood P2/P1 blocks for Stokes.

use super::{FemError, LameParams};
use crate::geometry::{signed_area2, Point};

/// Midpoint rule (degree 2): barycentric points and weights summing to 1.
pub const MIDPOINT_RULE: [([f64; 3], f64); 3] = [
    ([0.5, 0.5, 0.0], 1.0 / 3.0),
    ([0.0, 0.5, 0.5], 1.0 / 3.0),
    ([0.5, 0.0, 0.5], 1.0 / 3.0),
];

/// Seven-point degree-5 rule.
pub const TRI_QUAD_DEG5: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.797426985353087;
    const B1: f64 = 0.101286507323456;
    const W1: f64 = 0.125939180544827;
    const A2: f64 = 0.059715871789770;
    const B2: f64 = 0.470142064105115;
    const W2: f64 = 0.132394152788506;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

/// Gradients of the barycentric coordinates and the (positive) area.
fn p1_gradients(coords: [Point; 3]) -> Result<([[f64; 2]; 3], f64), FemError> {
    let [a, b, c] = coords;
    let det = signed_area2(a, b, c);
    let scale = a.dist(b).max(b.dist(c)).max(c.dist(a));
    if det <= 1e-14 * scale * scale {
        return Err(FemError::DegenerateTriangle);
    }
    let grads = [
        [(b.y - c.y) / det, (c.x - b.x) / det],
        [(c.y - a.y) / det, (a.x - c.x) / det],
        [(a.y - b.y) / det, (b.x - a.x) / det],
    ];
    Ok((grads, 0.5 * det))
}

/// P1 stiffness: K_ab = ∫ ∇φ_a · ∇φ_b.
pub fn element_laplace(coords: [Point; 3]) -> Result<[[f64; 3]; 3], FemError> {
    let (g, area) = p1_gradients(coords)?;
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
        }
    }
    Ok(k)
}

/// P1 mass: M = (area / 12) · [[2,1,1],[1,2,1],[1,1,2]].
pub fn element_mass(coords: [Point; 3]) -> Result<[[f64; 3]; 3], FemError> {
    let (_, area) = p1_gradients(coords)?;
    let mut m = [[area / 12.0; 3]; 3];
    for i in 0..3 {
        m[i][i] = area / 6.0;
    }
    Ok(m)
}

/// Plane-strain P1 elasticity: K = area · Bᵀ D B with Voigt strain
/// [εxx, εyy, γxy] and interleaved DOFs (a_x, a_y, b_x, b_y, c_x, c_y).
pub fn element_elasticity(
    coords: [Point; 3],
    lame: LameParams,
) -> Result<[[f64; 6]; 6], FemError> {
    let (g, area) = p1_gradients(coords)?;
    let mut bmat = [[0.0; 6]; 3];
    for a in 0..3 {
        bmat[0][2 * a] = g[a][0];
        bmat[1][2 * a + 1] = g[a][1];
        bmat[2][2 * a] = g[a][1];
        bmat[2][2 * a + 1] = g[a][0];
    }
    let (l, m) = (lame.lambda, lame.mu);
    let d = [[l + 2.0 * m, l, 0.0], [l, l + 2.0 * m, 0.0], [0.0, 0.0, m]];
    let mut k = [[0.0; 6]; 6];
    for p in 0..6 {
        for q in 0..6 {
            let mut acc = 0.0;
            for r in 0..3 {
                for s in 0..3 {
                    acc += bmat[r][p] * d[r][s] * bmat[s][q];
                }
            }
            k[p][q] = area * acc;
        }
    }
    Ok(k)
}

/// P2 shape function values at a barycentric point. Local node order:
/// vertices 0..3, then midpoints of edges (0,1), (1,2), (2,0).
pub fn p2_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

/// P2 shape function gradients at a barycentric point.
pub fn p2_gradients(l: [f64; 3], g: &[[f64; 2]; 3]) -> [[f64; 2]; 6] {
    let mut out = [[0.0; 2]; 6];
    for v in 0..3 {
        for d in 0..2 {
            out[v][d] = (4.0 * l[v] - 1.0) * g[v][d];
        }
    }
    let pairs = [(0, 1), (1, 2), (2, 0)];
    for (k, (i, j)) in pairs.into_iter().enumerate() {
        for d in 0..2 {
            out[3 + k][d] = 4.0 * (l[j] * g[i][d] + l[i] * g[j][d]);
        }
    }
    out
}

/// Scalar P2 stiffness (6x6), exact via the degree-2 midpoint rule.
pub fn element_p2_stiffness(coords: [Point; 3]) -> Result<[[f64; 6]; 6], FemError> {
    let (g, area) = p1_gradients(coords)?;
    let mut k = [[0.0; 6]; 6];
    for (l, w) in MIDPOINT_RULE {
        let grads = p2_gradients(l, &g);
        for a in 0..6 {
            for b in 0..6 {
                k[a][b] += w * area * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
            }
        }
    }
    Ok(k)
}

/// Scalar P2 mass (6x6), exact via the degree-5 rule.
pub fn element_p2_mass(coords: [Point; 3]) -> Result<[[f64; 6]; 6], FemError> {
    let (_, area) = p1_gradients(coords)?;
    let mut m = [[0.0; 6]; 6];
    for (l, w) in TRI_QUAD_DEG5 {
        let vals = p2_values(l);
        for a in 0..6 {
            for b in 0..6 {
                m[a][b] += w * area * vals[a] * vals[b];
            }
        }
    }
    Ok(m)
}

/// Taylor-Hood element blocks: the vector P2 Laplacian (12x12, interleaved
/// components, viscosity applied at assembly) and the divergence block
/// D[2a+c][l] = ∫ φ_l^{P1} ∂φ_a^{P2}/∂x_c.
#[allow(clippy::type_complexity)]
pub fn element_stokes(coords: [Point; 3]) -> Result<([[f64; 12]; 12], [[f64; 3]; 12]), FemError> {
    let (g, area) = p1_gradients(coords)?;
    let scalar = element_p2_stiffness(coords)?;
    let mut velocity = [[0.0; 12]; 12];
    for a in 0..6 {
        for b in 0..6 {
            for c in 0..2 {
                velocity[2 * a + c][2 * b + c] = scalar[a][b];
            }
        }
    }
    let mut div = [[0.0; 3]; 12];
    for (l, w) in MIDPOINT_RULE {
        let grads = p2_gradients(l, &g);
        for a in 0..6 {
            for c in 0..2 {
                for q in 0..3 {
                    div[2 * a + c][q] += w * area * l[q] * grads[a][c];
                }
            }
        }
    }
    Ok((velocity, div))
}

/// Edge connectivity for P2 spaces: unique undirected edges (sorted pairs)
/// and, per triangle, the edge indices for (v0,v1), (v1,v2), (v2,v0).
#[derive(Debug, Clone, PartialEq)]
pub struct P2Connectivity {
    pub edges: Vec<(usize, usize)>,
    pub tri_edges: Vec<[usize; 3]>,
}

pub fn p2_connectivity(triangles: &[[usize; 3]]) -> P2Connectivity {
    let mut set = std::collections::BTreeSet::new();
    for tri in triangles {
        for k in 0..3 {
            let a = tri[k];
            let b = tri[(k + 1) % 3];
            set.insert((a.min(b), a.max(b)));
        }
    }
    let edges: Vec<(usize, usize)> = set.into_iter().collect();
    let lookup = |a: usize, b: usize| edges.binary_search(&(a.min(b), a.max(b))).unwrap();
    let tri_edges = triangles
        .iter()
        .map(|t| [lookup(t[0], t[1]), lookup(t[1], t[2]), lookup(t[2], t[0])])
        .collect();
    P2Connectivity { edges, tri_edges }
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIT_RIGHT: [Point; 3] = [
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(0.0, 1.0),
    ];

    #[test]
    fn laplace_unit_right_triangle() {
        let k = element_laplace(UNIT_RIGHT).unwrap();
        let expected = [
            [1.0, -0.5, -0.5],
            [-0.5, 0.5, 0.0],
            [-0.5, 0.0, 0.5],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - expected[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn laplace_row_sums_vanish() {
        let tri = [
            Point::new(0.2, 0.1),
            Point::new(0.9, 0.3),
            Point::new(0.4, 0.8),
        ];
        let k = element_laplace(tri).unwrap();
        for row in k {
            assert!(row.iter().sum::<f64>().abs() < 1e-14);
        }
    }

    #[test]
    fn laplace_scale_invariant() {
        let tri = [
            Point::new(0.0, 0.0),
            Point::new(0.7, 0.1),
            Point::new(0.2, 0.6),
        ];
        let scaled = tri.map(|p| p * 2.0);
        let k1 = element_laplace(tri).unwrap();
        let k2 = element_laplace(scaled).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((k1[i][j] - k2[i][j]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let tri = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
        ];
        assert!(matches!(
            element_laplace(tri),
            Err(FemError::DegenerateTriangle)
        ));
    }

    #[test]
    fn mass_unit_right_triangle() {
        let m = element_mass(UNIT_RIGHT).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 / 12.0 } else { 1.0 / 24.0 };
                assert!((m[i][j] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn mass_integrates_constants_to_area() {
        let tri = [
            Point::new(0.1, 0.2),
            Point::new(0.8, 0.25),
            Point::new(0.3, 0.9),
        ];
        let m = element_mass(tri).unwrap();
        let area = 0.5 * signed_area2(tri[0], tri[1], tri[2]);
        let total: f64 = m.iter().flatten().sum();
        assert!((total - area).abs() < 1e-14);
    }

    #[test]
    fn mass_congruent_triangles_identical() {
        let t1 = [
            Point::new(0.0, 0.0),
            Point::new(0.5, 0.0),
            Point::new(0.0, 0.4),
        ];
        let t2 = [
            Point::new(2.0, 1.0),
            Point::new(2.5, 1.0),
            Point::new(2.0, 1.4),
        ];
        let m1 = element_mass(t1).unwrap();
        let m2 = element_mass(t2).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((m1[i][j] - m2[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn elasticity_annihilates_rigid_body_modes() {
        let tri = [
            Point::new(0.1, 0.3),
            Point::new(0.9, 0.2),
            Point::new(0.5, 0.8),
        ];
        let lame = LameParams::from_young_poisson(1e9, 0.22);
        let k = element_elasticity(tri, lame).unwrap();
        let scale: f64 = k.iter().flatten().fold(0.0, |m, v| m.max(v.abs()));
        let tx = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        let ty = [0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
        let rot = [
            -tri[0].y, tri[0].x, -tri[1].y, tri[1].x, -tri[2].y, tri[2].x,
        ];
        for mode in [tx, ty, rot] {
            for row in &k {
                let r: f64 = row.iter().zip(&mode).map(|(a, b)| a * b).sum();
                assert!(r.abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn stokes_divergence_annihilates_divergence_free_fields() {
        let tri = [
            Point::new(0.05, 0.1),
            Point::new(0.85, 0.2),
            Point::new(0.3, 0.9),
        ];
        let (_, div) = element_stokes(tri).unwrap();
        // constant velocity (1, 2)
        let p2 = p2_nodes(tri);
        let mut constant = [0.0; 12];
        let mut linear = [0.0; 12];
        for a in 0..6 {
            constant[2 * a] = 1.0;
            constant[2 * a + 1] = 2.0;
            // u = (x, -y) is divergence-free and quadratically exact in P2
            linear[2 * a] = p2[a].x;
            linear[2 * a + 1] = -p2[a].y;
        }
        for field in [constant, linear] {
            for q in 0..3 {
                let act: f64 = (0..12).map(|v| div[v][q] * field[v]).sum();
                assert!(act.abs() < 1e-14, "divergence action {act}");
            }
        }
    }

    #[test]
    fn p2_stiffness_annihilates_constants() {
        let tri = [
            Point::new(0.0, 0.0),
            Point::new(1.3, 0.1),
            Point::new(0.4, 1.1),
        ];
        let k = element_p2_stiffness(tri).unwrap();
        for row in k {
            assert!(row.iter().sum::<f64>().abs() < 1e-13);
        }
    }

    #[test]
    fn p2_mass_integrates_one() {
        let tri = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ];
        let m = element_p2_mass(tri).unwrap();
        let total: f64 = m.iter().flatten().sum();
        assert!((total - 0.5).abs() < 1e-14); // sum_ab ∫ φa φb = ∫ 1 = area
    }

    fn p2_nodes(tri: [Point; 3]) -> [Point; 6] {
        let mid = |a: Point, b: Point| Point::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
        [
            tri[0],
            tri[1],
            tri[2],
            mid(tri[0], tri[1]),
            mid(tri[1], tri[2]),
            mid(tri[2], tri[0]),
        ]
    }

    #[test]
    fn quadrature_rules_integrate_barycentric_monomials() {
        // exact: ∫_T λ0^a λ1^b λ2^c = 2A · a! b! c! / (a+b+c+2)!
        let fact = |n: usize| (1..=n).product::<usize>() as f64;
        let exact = |a: usize, b: usize, c: usize| {
            2.0 * 0.5 * fact(a) * fact(b) * fact(c) / fact(a + b + c + 2)
        };
        let check = |rule: &[([f64; 3], f64)], degree: usize| {
            for a in 0..=degree {
                for b in 0..=(degree - a) {
                    for c in 0..=(degree - a - b) {
                        let approx: f64 = rule
                            .iter()
                            .map(|(l, w)| {
                                0.5 * w * l[0].powi(a as i32) * l[1].powi(b as i32)
                                    * l[2].powi(c as i32)
                            })
                            .sum();
                        assert!(
                            (approx - exact(a, b, c)).abs() < 1e-14,
                            "monomial ({a},{b},{c}) degree {degree}"
                        );
                    }
                }
            }
        };
        check(&MIDPOINT_RULE, 2);
        check(&TRI_QUAD_DEG5, 5);
    }

    #[test]
    fn p2_connectivity_consistent() {
        let tris = vec![[0usize, 1, 2], [1, 3, 2]];
        let conn = p2_connectivity(&tris);
        assert_eq!(conn.edges.len(), 5);
        // shared edge (1,2) must get the same index from both triangles
        let e0 = conn.tri_edges[0][1]; // edge (1,2) of first triangle
        let e1 = conn.tri_edges[1][2]; // edge (2,1) of second triangle
        assert_eq!(e0, e1);
    }
}

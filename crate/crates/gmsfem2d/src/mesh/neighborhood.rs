//! Coarse neighborhoods: the fine elements around one coarse node, with the
//! local DOF map and boundary classification used by the local solves.

use super::coarse::CoarseGrid;
use super::fine::{FineMesh, NodeMarker};

#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    pub coarse_node: usize,
    /// Fine-triangle indices, ascending.
    pub fine_elements: Vec<usize>,
    /// Local node index -> global fine node index, ascending (injective).
    pub local_to_global: Vec<usize>,
    /// Local node indices on the neighborhood outline, excluding hole
    /// boundaries.
    pub boundary_dofs: Vec<usize>,
    /// Local node indices on hole boundaries inside or crossing the
    /// neighborhood.
    pub perforation_dofs: Vec<usize>,
    pub oversample_layers: usize,
}

impl Neighborhood {
    pub fn n_local(&self) -> usize {
        self.local_to_global.len()
    }

    pub fn global_to_local(&self, global: usize) -> Option<usize> {
        self.local_to_global.binary_search(&global).ok()
    }
}

pub fn build_neighborhood(coarse: &CoarseGrid, fine: &FineMesh, coarse_node: usize) -> Neighborhood {
    assert!(coarse_node < coarse.n_nodes(), "coarse node out of range");
    let patch: std::collections::BTreeSet<usize> =
        coarse.triangles_at_node(coarse_node).into_iter().collect();
    let elements: Vec<usize> = (0..fine.n_triangles())
        .filter(|&t| patch.contains(&fine.coarse_parent[t]))
        .collect();
    classify(fine, coarse_node, elements, 0)
}

/// Grow the neighborhood by `t` layers of edge-adjacent fine triangles.
pub fn oversample(fine: &FineMesh, nb: &Neighborhood, t: usize) -> Neighborhood {
    if t == 0 {
        return nb.clone();
    }
    let edge_map = fine.edge_map();
    let mut in_set = vec![false; fine.n_triangles()];
    for &e in &nb.fine_elements {
        in_set[e] = true;
    }
    for _ in 0..t {
        let mut added = Vec::new();
        for tris in edge_map.values() {
            if tris.len() == 2 {
                let (a, b) = (tris[0], tris[1]);
                match (in_set[a], in_set[b]) {
                    (true, false) => added.push(b),
                    (false, true) => added.push(a),
                    _ => {}
                }
            }
        }
        for e in added {
            in_set[e] = true;
        }
    }
    let elements: Vec<usize> = (0..fine.n_triangles()).filter(|&t| in_set[t]).collect();
    classify(fine, nb.coarse_node, elements, nb.oversample_layers + t)
}

fn classify(
    fine: &FineMesh,
    coarse_node: usize,
    elements: Vec<usize>,
    oversample_layers: usize,
) -> Neighborhood {
    let mut local_nodes = std::collections::BTreeSet::new();
    for &e in &elements {
        for &v in &fine.triangles[e] {
            local_nodes.insert(v);
        }
    }
    let local_to_global: Vec<usize> = local_nodes.into_iter().collect();
    let global_to_local = |g: usize| local_to_global.binary_search(&g).unwrap();

    // outline edges: edges with exactly one incident element inside the set
    let mut edge_count: std::collections::BTreeMap<(usize, usize), usize> =
        std::collections::BTreeMap::new();
    for &e in &elements {
        let tri = fine.triangles[e];
        for k in 0..3 {
            let a = tri[k];
            let b = tri[(k + 1) % 3];
            *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let mut outline = std::collections::BTreeSet::new();
    for (&(a, b), &count) in &edge_count {
        if count == 1 {
            outline.insert(a);
            outline.insert(b);
        }
    }

    let mut boundary_dofs = Vec::new();
    let mut perforation_dofs = Vec::new();
    for (local, &global) in local_to_global.iter().enumerate() {
        if fine.node_markers[global] == NodeMarker::Perforation {
            perforation_dofs.push(local);
        } else if outline.contains(&global) {
            boundary_dofs.push(local);
        }
    }
    let _ = global_to_local;

    Neighborhood {
        coarse_node,
        fine_elements: elements,
        local_to_global,
        boundary_dofs,
        perforation_dofs,
        oversample_layers,
    }
}

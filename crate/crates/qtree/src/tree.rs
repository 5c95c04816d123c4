//! Explicit finite truncations of infinite quantum trees.
//!
//! A truncated tree is the carrier for the recursions and the brute-force
//! oracles. Every non-root vertex v owns the edge (parent(v), v), so vertices
//! double as edge indices. The root may own a pendant root edge whose lower
//! endpoint is a free evaluation point. Truncation leaves remember the labels
//! of their unexpanded children so boundary rules can close them off.

use crate::error::{Error, Result};
use crate::graph::ConeSystem;
use crate::potential::PotentialSpec;

pub const DEFAULT_VERTEX_CAP: usize = 1_000_000;

#[derive(Clone, Debug)]
pub struct TreeVertex {
    pub label: usize,
    pub alpha: f64,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub depth: usize,
    /// Data of the edge (parent(v), v); `None` only for a root without a
    /// pendant root edge.
    pub edge: Option<ParentEdge>,
    /// Labels of unexpanded children (nonempty only at truncation leaves).
    pub missing_children: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct ParentEdge {
    pub length: f64,
    pub potential: PotentialSpec,
    pub label: usize,
}

#[derive(Clone, Debug)]
pub struct TruncatedQuantumTree {
    verts: Vec<TreeVertex>,
}

impl TruncatedQuantumTree {
    pub fn from_vertices(verts: Vec<TreeVertex>) -> Self {
        TruncatedQuantumTree { verts }
    }

    pub fn len(&self) -> usize {
        self.verts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }

    pub fn vertex(&self, v: usize) -> &TreeVertex {
        &self.verts[v]
    }

    pub fn vertices(&self) -> &[TreeVertex] {
        &self.verts
    }

    pub fn vertices_mut(&mut self) -> &mut [TreeVertex] {
        &mut self.verts
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.verts[v].children.is_empty()
    }

    pub fn max_depth(&self) -> usize {
        self.verts.iter().map(|v| v.depth).max().unwrap_or(0)
    }

    /// Vertices ordered children-before-parents (vertices are created in BFS
    /// order, so reversed index order works).
    pub fn post_order(&self) -> impl Iterator<Item = usize> {
        (0..self.verts.len()).rev()
    }

    /// Path of vertices from `a` to `b` through their closest common
    /// ancestor.
    pub fn vertex_path(&self, a: usize, b: usize) -> Vec<usize> {
        let mut up_a = vec![a];
        let mut cur = a;
        while let Some(p) = self.verts[cur].parent {
            up_a.push(p);
            cur = p;
        }
        let mut up_b = vec![b];
        cur = b;
        while let Some(p) = self.verts[cur].parent {
            up_b.push(p);
            cur = p;
        }
        // drop the shared tail
        while up_a.len() > 1
            && up_b.len() > 1
            && up_a[up_a.len() - 1] == up_b[up_b.len() - 1]
            && up_a[up_a.len() - 2] == up_b[up_b.len() - 2]
        {
            up_a.pop();
            up_b.pop();
        }
        up_b.pop();
        up_b.reverse();
        up_a.extend(up_b);
        up_a
    }

    /// Per-label structural scan: all vertices with equal labels must carry
    /// equal (length, coupling, potential) data.
    pub fn check_label_consistency(&self) -> Result<()> {
        use std::collections::HashMap;
        let mut seen: HashMap<usize, (u64, u64, PotentialSpec)> = HashMap::new();
        for v in &self.verts {
            let Some(edge) = &v.edge else { continue };
            let key = (edge.length.to_bits(), v.alpha.to_bits(), edge.potential.clone());
            match seen.get(&v.label) {
                None => {
                    seen.insert(v.label, key);
                }
                Some(prev) => {
                    if *prev != key {
                        return Err(Error::ConditionViolation(format!(
                            "two vertices of label {} carry different data",
                            v.label
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Materializes the forward cone of a cone system to a finite depth, root
/// vertex at generation 0 and leaves at generation `depth`, with the pendant
/// root edge attached below the root.
pub fn expand_truncated_tree(
    system: &ConeSystem,
    depth: usize,
    vertex_cap: Option<usize>,
) -> Result<TruncatedQuantumTree> {
    system.validate()?;
    if depth < 1 {
        return Err(Error::InvalidInput("expansion depth must be ≥ 1".into()));
    }
    let cap = vertex_cap.unwrap_or(DEFAULT_VERTEX_CAP);

    // predicted size guard before allocating
    let m = system.size();
    let mut level = vec![0u128; m];
    level[system.root_label] = 1;
    let mut total: u128 = 1;
    for _ in 0..depth {
        let mut next = vec![0u128; m];
        for j in 0..m {
            if level[j] == 0 {
                continue;
            }
            for k in 0..m {
                next[k] += level[j] * system.child_matrix[j][k] as u128;
            }
        }
        total += next.iter().sum::<u128>();
        if total > cap as u128 {
            return Err(Error::SizeOverflow { got: total as usize, cap });
        }
        level = next;
    }

    let (root_len, root_pot) = system.root_edge_data();
    let root_label = system.root_label;
    let mut verts = vec![TreeVertex {
        label: root_label,
        alpha: system.labels[root_label].alpha,
        parent: None,
        children: Vec::new(),
        depth: 0,
        edge: Some(ParentEdge { length: root_len, potential: root_pot, label: root_label }),
        missing_children: Vec::new(),
    }];

    let mut frontier = vec![0usize];
    for gen in 1..=depth {
        let mut next_frontier = Vec::new();
        for &v in &frontier {
            let j = verts[v].label;
            for k in 0..m {
                for _ in 0..system.child_matrix[j][k] {
                    let d = &system.labels[k];
                    let c = verts.len();
                    verts.push(TreeVertex {
                        label: k,
                        alpha: d.alpha,
                        parent: Some(v),
                        children: Vec::new(),
                        depth: gen,
                        edge: Some(ParentEdge {
                            length: d.length,
                            potential: d.potential.clone(),
                            label: k,
                        }),
                        missing_children: Vec::new(),
                    });
                    verts[v].children.push(c);
                    next_frontier.push(c);
                }
            }
        }
        frontier = next_frontier;
    }
    // record unexpanded children at the truncation depth
    for &v in &frontier {
        let j = verts[v].label;
        let mut missing = Vec::new();
        for k in 0..m {
            for _ in 0..system.child_matrix[j][k] {
                missing.push(k);
            }
        }
        verts[v].missing_children = missing;
    }

    Ok(TruncatedQuantumTree::from_vertices(verts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::LabelData;

    fn two_label_system() -> ConeSystem {
        ConeSystem {
            child_matrix: vec![vec![1, 2], vec![1, 1]],
            labels: vec![
                LabelData { length: 1.0, potential: PotentialSpec::Zero, alpha: 0.0 },
                LabelData { length: 0.7, potential: PotentialSpec::Zero, alpha: 0.5 },
            ],
            root_label: 0,
            root_edge: None,
            reversal: None,
        }
    }

    #[test]
    fn binary_cone_counts() {
        let sys = ConeSystem::regular(2, 1.0, 0.0, PotentialSpec::Zero);
        let t = expand_truncated_tree(&sys, 3, None).unwrap();
        assert_eq!(t.len(), 15); // 1 + 2 + 4 + 8
        assert!(t.vertex(0).edge.is_some(), "pendant root edge present");
        assert_eq!(t.vertices().iter().filter(|v| v.children.is_empty()).count(), 8);
    }

    #[test]
    fn depth_zero_rejected() {
        let sys = ConeSystem::regular(2, 1.0, 0.0, PotentialSpec::Zero);
        assert!(expand_truncated_tree(&sys, 0, None).is_err());
    }

    #[test]
    fn mixed_label_counts_by_enumeration() {
        let sys = two_label_system();
        let t = expand_truncated_tree(&sys, 2, None).unwrap();
        // root children: one label-0, two label-1
        let root_kids: Vec<usize> = t.vertex(0).children.iter().map(|&c| t.vertex(c).label).collect();
        assert_eq!(root_kids.iter().filter(|&&l| l == 0).count(), 1);
        assert_eq!(root_kids.iter().filter(|&&l| l == 1).count(), 2);
        // brute-force generation count: gen2 = 3 label-0 + 4 label-1
        let gen2: Vec<&TreeVertex> = t.vertices().iter().filter(|v| v.depth == 2).collect();
        assert_eq!(gen2.iter().filter(|v| v.label == 0).count(), 3);
        assert_eq!(gen2.iter().filter(|v| v.label == 1).count(), 4);
        assert_eq!(t.len(), 1 + 3 + 7);
        t.check_label_consistency().unwrap();
        // leaves remember their unexpanded children
        for v in t.vertices().iter().filter(|v| v.depth == 2) {
            let expect: usize = sys.child_matrix[v.label].iter().sum();
            assert_eq!(v.missing_children.len(), expect);
        }
    }

    #[test]
    fn size_cap_enforced() {
        let sys = ConeSystem::regular(2, 1.0, 0.0, PotentialSpec::Zero);
        assert!(matches!(
            expand_truncated_tree(&sys, 25, Some(1000)),
            Err(Error::SizeOverflow { .. })
        ));
    }

    #[test]
    fn cycle_cover_expands_to_line() {
        use crate::graph::build_universal_cover_system;
        use crate::graph::tests::cycle_graph;
        let sys = build_universal_cover_system(&cycle_graph(4, 1.0)).unwrap();
        let t = expand_truncated_tree(&sys, 5, None).unwrap();
        assert_eq!(t.len(), 6);
        for v in t.vertices() {
            assert!(v.children.len() <= 1);
        }
    }

    #[test]
    fn vertex_path_through_common_ancestor() {
        let sys = ConeSystem::regular(2, 1.0, 0.0, PotentialSpec::Zero);
        let t = expand_truncated_tree(&sys, 3, None).unwrap();
        let kids = t.vertex(0).children.clone();
        let a = t.vertex(kids[0]).children[0];
        let b = t.vertex(kids[1]).children[1];
        let p = t.vertex_path(a, b);
        assert_eq!(p.first(), Some(&a));
        assert_eq!(p.last(), Some(&b));
        assert_eq!(p.len(), 5); // a, kids[0], root, kids[1], b
        assert!(p.contains(&0));
    }
}

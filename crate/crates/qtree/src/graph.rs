//! Quantum graphs, cone systems and structural conditions.
//!
//! A finite base graph with edge lengths, edge potentials and δ-couplings
//! lifts to its universal cover, an infinite tree whose forward subtrees fall
//! into finitely many isomorphism classes ("cone types"). The lift is encoded
//! as a [`ConeSystem`]: one label per class of directed base edges, a
//! child-count matrix M, and per-label edge/vertex data. Everything downstream
//! (band detection, recursions, disorder sampling) consumes the cone system,
//! never the infinite tree itself.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::edge;
use crate::error::{Error, Result};
use crate::potential::PotentialSpec;

/// Finite quantum graph: vertices, undirected edges with lengths and
/// potentials, and one δ-coupling per vertex.
///
/// JSON shape:
/// ```json
/// {
///   "vertices": ["a", "b"],
///   "edges": [{ "u": "a", "v": "b", "length": 1.0, "potential": { "type": "zero" } }],
///   "couplings": { "a": 0.0, "b": 1.5 }
/// }
/// ```
/// Missing couplings default to 0 (Kirchhoff-Neumann). The potential is read
/// in the u → v direction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuantumGraphSpec {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeSpec>,
    #[serde(default)]
    pub couplings: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub u: String,
    pub v: String,
    pub length: f64,
    #[serde(default = "default_potential")]
    pub potential: PotentialSpec,
}

fn default_potential() -> PotentialSpec {
    PotentialSpec::Zero
}

impl QuantumGraphSpec {
    pub fn validate(&self) -> Result<()> {
        if self.vertices.is_empty() {
            return Err(Error::InvalidInput("graph has no vertices".into()));
        }
        let index = self.vertex_index();
        if index.len() != self.vertices.len() {
            return Err(Error::InvalidInput("duplicate vertex id".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for e in &self.edges {
            if e.u == e.v {
                return Err(Error::InvalidInput(format!("self-loop at {}", e.u)));
            }
            if !index.contains_key(&e.u) || !index.contains_key(&e.v) {
                return Err(Error::InvalidInput(format!(
                    "edge ({}, {}) references unknown vertex",
                    e.u, e.v
                )));
            }
            let key = if e.u < e.v { (e.u.clone(), e.v.clone()) } else { (e.v.clone(), e.u.clone()) };
            if !seen.insert(key) {
                return Err(Error::InvalidInput(format!(
                    "multiple edges between {} and {}",
                    e.u, e.v
                )));
            }
            if !(e.length > 0.0 && e.length.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "edge ({}, {}) has non-positive length {}",
                    e.u, e.v, e.length
                )));
            }
            e.potential.validate()?;
        }
        for (v, a) in &self.couplings {
            if !index.contains_key(v) {
                return Err(Error::InvalidInput(format!("coupling for unknown vertex {v}")));
            }
            if !a.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite coupling at {v}")));
            }
        }
        if !self.is_connected() {
            return Err(Error::InvalidInput("graph is not connected".into()));
        }
        Ok(())
    }

    pub fn vertex_index(&self) -> HashMap<String, usize> {
        self.vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect()
    }

    pub fn coupling(&self, v: &str) -> f64 {
        self.couplings.get(v).copied().unwrap_or(0.0)
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let index = self.vertex_index();
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (ei, e) in self.edges.iter().enumerate() {
            adj[index[&e.u]].push(ei);
            adj[index[&e.v]].push(ei);
        }
        adj
    }

    pub fn degree(&self, vi: usize) -> usize {
        self.adjacency()[vi].len()
    }

    fn is_connected(&self) -> bool {
        if self.vertices.is_empty() {
            return false;
        }
        let adj = self.adjacency();
        let index = self.vertex_index();
        let mut seen = vec![false; self.vertices.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &ei in &adj[v] {
                let e = &self.edges[ei];
                let w = if index[&e.u] == v { index[&e.v] } else { index[&e.u] };
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.vertices.len()
    }

    pub fn is_tree(&self) -> bool {
        self.edges.len() + 1 == self.vertices.len()
    }

    pub fn is_cycle(&self) -> bool {
        !self.vertices.is_empty()
            && self.edges.len() == self.vertices.len()
            && (0..self.vertices.len()).all(|v| self.degree(v) == 2)
    }
}

/// Per-label edge data of a cone system.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LabelData {
    pub length: f64,
    #[serde(default = "default_potential")]
    pub potential: PotentialSpec,
    /// δ-coupling at the terminus vertex of a label edge.
    pub alpha: f64,
}

/// A tree of finite cone type in the single-alphabet (twisted) encoding.
///
/// `child_matrix[j][k]` counts the type-k children of a type-j vertex. The
/// root edge may carry special data; it defaults to the root label's data.
/// `reversal`, when present, maps each label to the label of the reversed
/// directed edge; it exists for universal covers whose label classes are
/// closed under reversal and unlocks backward (R⁻, diagonal Green) values.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeSystem {
    pub child_matrix: Vec<Vec<usize>>,
    pub labels: Vec<LabelData>,
    pub root_label: usize,
    #[serde(default)]
    pub root_edge: Option<RootEdgeData>,
    #[serde(default)]
    pub reversal: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RootEdgeData {
    pub length: f64,
    #[serde(default = "default_potential")]
    pub potential: PotentialSpec,
}

impl ConeSystem {
    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.size();
        if m == 0 {
            return Err(Error::InvalidInput("cone system has no labels".into()));
        }
        if self.child_matrix.len() != m || self.child_matrix.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidInput("child matrix is not m×m".into()));
        }
        if self.root_label >= m {
            return Err(Error::InvalidInput("root label out of range".into()));
        }
        for (j, d) in self.labels.iter().enumerate() {
            if !(d.length > 0.0 && d.length.is_finite()) {
                return Err(Error::InvalidInput(format!("label {j} has bad length")));
            }
            if !d.alpha.is_finite() {
                return Err(Error::InvalidInput(format!("label {j} has bad coupling")));
            }
            d.potential.validate()?;
        }
        if let Some(rev) = &self.reversal {
            if rev.len() != m || rev.iter().any(|&r| r >= m) {
                return Err(Error::InvalidInput("reversal map malformed".into()));
            }
        }
        Ok(())
    }

    /// Data of the root edge (defaults to the root label's edge data).
    pub fn root_edge_data(&self) -> (f64, PotentialSpec) {
        match &self.root_edge {
            Some(r) => (r.length, r.potential.clone()),
            None => {
                let d = &self.labels[self.root_label];
                (d.length, d.potential.clone())
            }
        }
    }

    pub fn row_sum(&self, j: usize) -> usize {
        self.child_matrix[j].iter().sum()
    }

    /// All distinct (length, potential) pairs, root edge included.
    pub fn edge_palette(&self) -> Vec<(f64, PotentialSpec)> {
        let mut out: Vec<(f64, PotentialSpec)> = self
            .labels
            .iter()
            .map(|d| (d.length, d.potential.clone()))
            .collect();
        out.push(self.root_edge_data());
        out
    }

    /// Dirichlet values per label up to λ_max.
    pub fn dirichlet_spectrum(&self, lambda_max: f64) -> Result<Vec<Vec<f64>>> {
        self.labels
            .iter()
            .map(|d| edge::dirichlet_spectrum(&d.potential, d.length, lambda_max, None))
            .collect()
    }

    /// Thickened Dirichlet set for length disorder ε (requires free edges).
    pub fn thickened_dirichlet(&self, eps: f64, lambda_max: f64) -> Result<Vec<(f64, f64)>> {
        if !self.labels.iter().all(|d| d.potential.is_zero()) {
            return Err(Error::InvalidInput(
                "thickened Dirichlet set is defined for potential-free systems".into(),
            ));
        }
        let mut lengths: Vec<f64> = self.labels.iter().map(|d| d.length).collect();
        lengths.push(self.root_edge_data().0);
        edge::thickened_dirichlet(&lengths, eps, lambda_max)
    }

    /// Real-axis Dirichlet guard over the whole palette.
    pub fn ensure_off_dirichlet(&self, lambda: f64, guard: f64) -> Result<()> {
        edge::ensure_off_dirichlet(&self.edge_palette(), lambda, guard)
    }

    /// Single-label system of the (q+1)-regular equilateral tree.
    pub fn regular(q: usize, length: f64, alpha: f64, potential: PotentialSpec) -> Self {
        ConeSystem {
            child_matrix: vec![vec![q]],
            labels: vec![LabelData { length, potential, alpha }],
            root_label: 0,
            root_edge: None,
            reversal: Some(vec![0]),
        }
    }
}

/// Pass/fail result of one structural condition, with a witness on failure.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub enum ConditionStatus {
    Pass,
    Fail { witness: String },
}

impl ConditionStatus {
    pub fn passed(&self) -> bool {
        matches!(self, ConditionStatus::Pass)
    }
}

/// Report of the structural conditions on a cone system:
///
/// * `c0` — every vertex of the tree has degree ≥ 3 (row sums ≥ 2),
/// * `c1_star` — the child matrix is irreducible,
/// * `c2` — every label has a dominating child label k' whose own children
///   cover the label set of its siblings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionReport {
    pub c0: ConditionStatus,
    pub c1_star: ConditionStatus,
    pub c2: ConditionStatus,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.c0.passed() && self.c1_star.passed() && self.c2.passed()
    }
}

impl std::fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let fmt1 = |s: &ConditionStatus| match s {
            ConditionStatus::Pass => "pass".to_string(),
            ConditionStatus::Fail { witness } => format!("FAIL ({witness})"),
        };
        write!(
            f,
            "C0: {}; C1*: {}; C2: {}",
            fmt1(&self.c0),
            fmt1(&self.c1_star),
            fmt1(&self.c2)
        )
    }
}

/// Checks (C0), (C1*) and (C2) on the child matrix.
///
/// (C1*) is irreducibility: every label reaches every label through powers of
/// M; verified by BFS on the directed support graph, which is equivalent to
/// positivity of (I + M)^m.
pub fn check_conditions(system: &ConeSystem) -> ConditionReport {
    let m = system.size();
    let mat = &system.child_matrix;

    let c0 = match (0..m).find(|&j| system.row_sum(j) < 2) {
        None => ConditionStatus::Pass,
        Some(j) => ConditionStatus::Fail {
            witness: format!("label {j} has {} children (tree degree {})", system.row_sum(j), system.row_sum(j) + 1),
        },
    };

    let mut c1_star = ConditionStatus::Pass;
    'outer: for k in 0..m {
        // BFS reachability from k
        let mut seen = vec![false; m];
        let mut queue = VecDeque::from([k]);
        seen[k] = true;
        while let Some(a) = queue.pop_front() {
            for b in 0..m {
                if mat[a][b] > 0 && !seen[b] {
                    seen[b] = true;
                    queue.push_back(b);
                }
            }
        }
        if let Some(l) = (0..m).find(|&l| !seen[l]) {
            c1_star = ConditionStatus::Fail {
                witness: format!("({}, {}): no n with (M^n)[{k}][{l}] ≥ 1", k, l),
            };
            break 'outer;
        }
    }

    let mut c2 = ConditionStatus::Pass;
    for k in 0..m {
        let dominates = |kp: usize| (0..m).all(|l| mat[k][l] == 0 || mat[kp][l] >= 1);
        if !(0..m).any(|kp| mat[k][kp] >= 1 && dominates(kp)) {
            c2 = ConditionStatus::Fail {
                witness: format!("label {k}: no child label k' covering its sibling labels"),
            };
            break;
        }
    }

    ConditionReport { c0, c1_star, c2 }
}

/// Picks, for each label, the (C2) child label k' with M[k][k'] ≥ 1 whose
/// children cover the sibling labels. Returns None for labels violating (C2).
pub fn c2_child(system: &ConeSystem, k: usize) -> Option<usize> {
    let m = system.size();
    let mat = &system.child_matrix;
    (0..m).find(|&kp| mat[k][kp] >= 1 && (0..m).all(|l| mat[k][l] == 0 || mat[kp][l] >= 1))
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct EdgeDataKey {
    length_bits: u64,
    potential: PotentialKey,
    alpha_bits: u64,
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum PotentialKey {
    Zero,
    Constant(u64),
    Cosine(u64, u64),
    Sampled(Vec<u64>),
}

fn potential_key(p: &PotentialSpec) -> PotentialKey {
    match p {
        PotentialSpec::Zero => PotentialKey::Zero,
        PotentialSpec::Constant { c } => PotentialKey::Constant(c.to_bits()),
        PotentialSpec::Cosine { c1, c2 } => PotentialKey::Cosine(c1.to_bits(), c2.to_bits()),
        PotentialSpec::Sampled { values } => {
            PotentialKey::Sampled(values.iter().map(|v| v.to_bits()).collect())
        }
    }
}

/// Builds the cone system of the universal cover of a finite base graph.
///
/// Directed base edges index the cone types; two directed edges share a label
/// when their data (length, potential profile, terminus coupling) and the
/// label multisets of their non-backtracking continuations agree, computed by
/// partition refinement to a fixed point. Data comparison is exact on the
/// float bit patterns.
///
/// Rejects graphs with a vertex of degree < 2 (the cover would have leaves).
pub fn build_universal_cover_system(base: &QuantumGraphSpec) -> Result<ConeSystem> {
    base.validate()?;
    let index = base.vertex_index();
    let nv = base.vertices.len();
    let adj = base.adjacency();
    if let Some(v) = (0..nv).find(|&v| adj[v].len() < 2) {
        return Err(Error::ConditionViolation(format!(
            "vertex {} has degree {} < 2; the universal cover would not have minimal degree 2",
            base.vertices[v],
            adj[v].len()
        )));
    }

    // directed edges: 2 per undirected edge, (edge index, forward flag)
    let ne = base.edges.len();
    let nd = 2 * ne;
    let dir_terminus = |d: usize| -> usize {
        let e = &base.edges[d / 2];
        if d % 2 == 0 { index[&e.v] } else { index[&e.u] }
    };
    let dir_origin = |d: usize| -> usize {
        let e = &base.edges[d / 2];
        if d % 2 == 0 { index[&e.u] } else { index[&e.v] }
    };
    let reverse = |d: usize| -> usize { d ^ 1 };
    let dir_data = |d: usize| -> (f64, PotentialSpec) {
        let e = &base.edges[d / 2];
        if d % 2 == 0 {
            (e.length, e.potential.clone())
        } else {
            (e.length, e.potential.reversed())
        }
    };

    // non-backtracking continuations
    let mut continuations: Vec<Vec<usize>> = vec![Vec::new(); nd];
    for d in 0..nd {
        let t = dir_terminus(d);
        for &ei in &adj[t] {
            for fwd in [0usize, 1usize] {
                let d2 = 2 * ei + fwd;
                if dir_origin(d2) == t && d2 != reverse(d) {
                    continuations[d].push(d2);
                }
            }
        }
    }

    // initial partition by edge data
    let mut class: Vec<usize> = vec![0; nd];
    {
        let mut map: HashMap<EdgeDataKey, usize> = HashMap::new();
        for d in 0..nd {
            let (length, potential) = dir_data(d);
            let alpha = base.coupling(&base.vertices[dir_terminus(d)]);
            let key = EdgeDataKey {
                length_bits: length.to_bits(),
                potential: potential_key(&potential),
                alpha_bits: alpha.to_bits(),
            };
            let next = map.len();
            class[d] = *map.entry(key).or_insert(next);
        }
    }

    // refinement: split classes by child-class multisets until stable
    loop {
        let mut map: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
        let mut next_class = vec![0; nd];
        for d in 0..nd {
            let mut kids: Vec<usize> = continuations[d].iter().map(|&c| class[c]).collect();
            kids.sort_unstable();
            let key = (class[d], kids);
            let next = map.len();
            next_class[d] = *map.entry(key).or_insert(next);
        }
        if next_class == class {
            break;
        }
        class = next_class;
    }

    let m = class.iter().max().unwrap() + 1;
    // representative per class
    let mut rep = vec![usize::MAX; m];
    for d in 0..nd {
        if rep[class[d]] == usize::MAX {
            rep[class[d]] = d;
        }
    }

    let mut child_matrix = vec![vec![0usize; m]; m];
    for j in 0..m {
        for &c in &continuations[rep[j]] {
            child_matrix[j][class[c]] += 1;
        }
    }
    // consistency: row sums must equal deg(terminus) − 1 for every member
    for d in 0..nd {
        let j = class[d];
        let expect = adj[dir_terminus(d)].len() - 1;
        let got: usize = child_matrix[j].iter().sum();
        if got != expect {
            return Err(Error::ConditionViolation(format!(
                "label {j}: row sum {got} but a member edge has {expect} continuations"
            )));
        }
    }

    let labels: Vec<LabelData> = (0..m)
        .map(|j| {
            let d = rep[j];
            let (length, potential) = dir_data(d);
            LabelData {
                length,
                potential,
                alpha: base.coupling(&base.vertices[dir_terminus(d)]),
            }
        })
        .collect();

    // reversal map, when class-consistent
    let mut reversal = Some(vec![0usize; m]);
    {
        let mut rev = vec![usize::MAX; m];
        for d in 0..nd {
            let j = class[d];
            let r = class[reverse(d)];
            if rev[j] == usize::MAX {
                rev[j] = r;
            } else if rev[j] != r {
                reversal = None;
                break;
            }
        }
        if let Some(out) = reversal.as_mut() {
            out.copy_from_slice(&rev);
        }
    }

    let root = class[0];
    let (root_len, root_pot) = dir_data(0);
    let system = ConeSystem {
        child_matrix,
        labels,
        root_label: root,
        root_edge: Some(RootEdgeData { length: root_len, potential: root_pot }),
        reversal,
    };
    system.validate()?;
    Ok(system)
}

/// Whether the cone system comes from a universal cover satisfying the
/// stronger structural assumption: base of minimal degree ≥ 2 that is not a
/// single cycle.
pub fn satisfies_c1(base: &QuantumGraphSpec) -> bool {
    base.validate().is_ok()
        && (0..base.vertices.len()).all(|v| base.degree(v) >= 2)
        && !base.is_cycle()
}

/// Orientation bookkeeping for an explicit finite tree: the coherent view
/// splits the tree along a root edge into a forward and a backward component
/// with parent/child maps on each side; the twisted view hangs both
/// components off the midpoint of the root edge, so every non-root vertex
/// has exactly one parent.
#[derive(Clone, Debug)]
pub struct OrientedTree {
    pub root_edge: (usize, usize),
    /// vertices in the component of t_{b_o} (coherent forward side)
    pub forward: Vec<usize>,
    /// vertices in the component of o_{b_o}
    pub backward: Vec<usize>,
    /// twisted view: parent of each vertex; the two root-edge endpoints have
    /// no parent (they descend from the implicit midpoint)
    pub twisted_parent: Vec<Option<usize>>,
    pub twisted_children: Vec<Vec<usize>>,
    /// labels by (depth from midpoint, degree), a coarse type function
    pub labels: Vec<usize>,
}

impl OrientedTree {
    /// Orients a finite tree along the directed edge (u, v).
    pub fn new(tree: &QuantumGraphSpec, root_edge: (&str, &str)) -> Result<Self> {
        tree.validate()?;
        if !tree.is_tree() {
            return Err(Error::InvalidInput("graph is not a tree".into()));
        }
        let index = tree.vertex_index();
        let (u, v) = (
            *index
                .get(root_edge.0)
                .ok_or_else(|| Error::InvalidInput("unknown root edge origin".into()))?,
            *index
                .get(root_edge.1)
                .ok_or_else(|| Error::InvalidInput("unknown root edge terminus".into()))?,
        );
        let adj = tree.adjacency();
        let edge_ok = tree.edges.iter().any(|e| {
            (index[&e.u] == u && index[&e.v] == v) || (index[&e.u] == v && index[&e.v] == u)
        });
        if !edge_ok {
            return Err(Error::InvalidInput("root edge is not an edge of the tree".into()));
        }

        let n = tree.vertices.len();
        let mut twisted_parent: Vec<Option<usize>> = vec![None; n];
        let mut twisted_children: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut depth = vec![usize::MAX; n];
        let mut side = vec![0u8; n];
        // BFS from both endpoints, never crossing the root edge
        let mut queue = VecDeque::from([v, u]);
        depth[v] = 0;
        depth[u] = 0;
        side[v] = 1;
        side[u] = 2;
        while let Some(x) = queue.pop_front() {
            for &ei in &adj[x] {
                let e = &tree.edges[ei];
                let y = if index[&e.u] == x { index[&e.v] } else { index[&e.u] };
                if (x == u && y == v) || (x == v && y == u) {
                    continue;
                }
                if depth[y] == usize::MAX {
                    depth[y] = depth[x] + 1;
                    side[y] = side[x];
                    twisted_parent[y] = Some(x);
                    twisted_children[x].push(y);
                    queue.push_back(y);
                }
            }
        }
        let forward: Vec<usize> = (0..n).filter(|&x| side[x] == 1).collect();
        let backward: Vec<usize> = (0..n).filter(|&x| side[x] == 2).collect();
        let labels: Vec<usize> = (0..n).map(|x| depth[x] * 64 + adj[x].len()).collect();
        Ok(OrientedTree {
            root_edge: (u, v),
            forward,
            backward,
            twisted_parent,
            twisted_children,
            labels,
        })
    }

    /// Every non-root vertex has exactly one parent; the two root-edge
    /// endpoints are the only parentless vertices.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.twisted_parent.len();
        let roots: Vec<usize> = (0..n).filter(|&x| self.twisted_parent[x].is_none()).collect();
        if roots.len() != 2 || !roots.contains(&self.root_edge.0) || !roots.contains(&self.root_edge.1) {
            return Err(Error::ConditionViolation(
                "twisted view must have exactly the two root-edge endpoints as roots".into(),
            ));
        }
        // the vertex ↦ parent-edge map is a bijection onto non-root edges,
        // so #edges = (n − 2) + the root edge
        let edge_count: usize = self.twisted_children.iter().map(|c| c.len()).sum();
        if edge_count != n - 2 {
            return Err(Error::ConditionViolation(
                "vertex/edge indexing is not a bijection".into(),
            ));
        }
        if self.forward.len() + self.backward.len() != n {
            return Err(Error::ConditionViolation("coherent split must cover the tree".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn complete_graph(n: usize, length: f64, alpha: f64) -> QuantumGraphSpec {
        let vertices: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push(EdgeSpec {
                    u: vertices[i].clone(),
                    v: vertices[j].clone(),
                    length,
                    potential: PotentialSpec::Zero,
                });
            }
        }
        let couplings = vertices.iter().map(|v| (v.clone(), alpha)).collect();
        QuantumGraphSpec { vertices, edges, couplings }
    }

    pub(crate) fn cycle_graph(n: usize, length: f64) -> QuantumGraphSpec {
        let vertices: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
        let edges = (0..n)
            .map(|i| EdgeSpec {
                u: vertices[i].clone(),
                v: vertices[(i + 1) % n].clone(),
                length,
                potential: PotentialSpec::Zero,
            })
            .collect();
        QuantumGraphSpec { vertices, edges, couplings: BTreeMap::new() }
    }

    #[test]
    fn k4_collapses_to_one_label() {
        let sys = build_universal_cover_system(&complete_graph(4, 1.0, 0.0)).unwrap();
        assert_eq!(sys.size(), 1);
        assert_eq!(sys.child_matrix, vec![vec![2]]);
        assert_eq!(sys.reversal, Some(vec![0]));
    }

    #[test]
    fn regular_bases_give_scalar_matrix() {
        // (q+1)-regular equilateral base → M = (q)
        for (n, q) in [(4usize, 2usize), (5, 3)] {
            let sys = build_universal_cover_system(&complete_graph(n, 1.0, 0.0)).unwrap();
            assert_eq!(sys.size(), 1);
            assert_eq!(sys.child_matrix, vec![vec![q]]);
        }
    }

    #[test]
    fn path_base_rejected() {
        let g = QuantumGraphSpec {
            vertices: vec!["a".into(), "b".into(), "c".into()],
            edges: vec![
                EdgeSpec { u: "a".into(), v: "b".into(), length: 1.0, potential: PotentialSpec::Zero },
                EdgeSpec { u: "b".into(), v: "c".into(), length: 1.0, potential: PotentialSpec::Zero },
            ],
            couplings: BTreeMap::new(),
        };
        assert!(matches!(
            build_universal_cover_system(&g),
            Err(Error::ConditionViolation(_))
        ));
    }

    #[test]
    fn cycle_base_gives_line() {
        let sys = build_universal_cover_system(&cycle_graph(3, 1.0)).unwrap();
        assert_eq!(sys.size(), 1);
        assert_eq!(sys.child_matrix, vec![vec![1]]);
    }

    #[test]
    fn mixed_lengths_split_labels() {
        // triangle with one long edge: directed edges split by data
        let mut g = cycle_graph(3, 1.0);
        g.edges[0].length = 2.0;
        let sys = build_universal_cover_system(&g).unwrap();
        assert!(sys.size() > 1);
        // every label still has exactly one continuation on a cycle cover
        for j in 0..sys.size() {
            assert_eq!(sys.row_sum(j), 1);
        }
    }

    #[test]
    fn conditions_on_frozen_examples() {
        let single = ConeSystem::regular(2, 1.0, 0.0, PotentialSpec::Zero);
        let r = check_conditions(&single);
        assert!(r.all_pass());

        let upper_triangular = ConeSystem {
            child_matrix: vec![vec![1, 1], vec![0, 1]],
            labels: vec![
                LabelData { length: 1.0, potential: PotentialSpec::Zero, alpha: 0.0 },
                LabelData { length: 1.0, potential: PotentialSpec::Zero, alpha: 0.0 },
            ],
            root_label: 0,
            root_edge: None,
            reversal: None,
        };
        let r = check_conditions(&upper_triangular);
        assert!(!r.c1_star.passed());
        assert!(matches!(&r.c1_star, ConditionStatus::Fail { witness } if witness.contains("(1, 0)")));

        // M = [[0,2],[2,0]]: C0 passes (row sums 2), C1* passes (period 2),
        // C2 fails (children of a type-0 vertex are all type 1, but type-1
        // vertices have no type-1 children)
        let bipartite = ConeSystem {
            child_matrix: vec![vec![0, 2], vec![2, 0]],
            labels: upper_triangular.labels.clone(),
            root_label: 0,
            root_edge: None,
            reversal: None,
        };
        let r = check_conditions(&bipartite);
        assert!(r.c0.passed());
        assert!(r.c1_star.passed());
        assert!(!r.c2.passed());

        // brute-force cross-check of C1* against (I+M)^m positivity
        for sys in [&single, &upper_triangular, &bipartite] {
            let m = sys.size();
            let mut p = vec![vec![0u64; m]; m];
            for i in 0..m {
                p[i][i] = 1;
                for j in 0..m {
                    p[i][j] += sys.child_matrix[i][j] as u64;
                }
            }
            let mut acc = p.clone();
            for _ in 1..m {
                let mut nxt = vec![vec![0u64; m]; m];
                for i in 0..m {
                    for k in 0..m {
                        for j in 0..m {
                            nxt[i][j] = nxt[i][j].saturating_add(acc[i][k].saturating_mul(p[k][j]));
                        }
                    }
                }
                acc = nxt;
            }
            let positive = (0..m).all(|i| (0..m).all(|j| acc[i][j] > 0));
            assert_eq!(positive, check_conditions(sys).c1_star.passed());
        }
    }

    #[test]
    fn oriented_tree_views() {
        let g = QuantumGraphSpec {
            vertices: vec!["a".into(), "b".into(), "c".into(), "d".into(), "e".into()],
            edges: vec![
                EdgeSpec { u: "a".into(), v: "b".into(), length: 1.0, potential: PotentialSpec::Zero },
                EdgeSpec { u: "b".into(), v: "c".into(), length: 1.0, potential: PotentialSpec::Zero },
                EdgeSpec { u: "b".into(), v: "d".into(), length: 1.0, potential: PotentialSpec::Zero },
                EdgeSpec { u: "a".into(), v: "e".into(), length: 1.0, potential: PotentialSpec::Zero },
            ],
            couplings: BTreeMap::new(),
        };
        let o = OrientedTree::new(&g, ("a", "b")).unwrap();
        o.check_invariants().unwrap();
        assert_eq!(o.forward.len(), 3); // b, c, d
        assert_eq!(o.backward.len(), 2); // a, e
    }
}

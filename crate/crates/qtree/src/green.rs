//! Weyl-Titchmarsh recursion and Green's function on truncated trees.
//!
//! On a rooted truncated tree the forward value R⁺(o_b) of an edge b is the
//! log-derivative at the origin of the solution that is outgoing on the
//! subtree above b. It is computed leaf-to-root: close off the leaves with a
//! boundary rule, combine children at a vertex through the δ-condition
//! (Σ R⁺(children) = R⁺(vertex) + α), and pull back through the edge by the
//! inverse monodromy. The backward values R⁻ run root-to-leaf the same way.
//! The multipliers are ζ(b) = C + R⁺(o_b) S and ζ(b̂) = S' + R⁻(t_b) S, and
//! the diagonal Green value is G(v,v) = −1/(R⁺(v) + R⁻(v)).
//!
//! All the algebraic relations between these quantities (transfer identities,
//! vertex sums, the multiplicative property along paths, current inequalities)
//! are re-checked numerically by [`identity_suite`]; everything downstream
//! trusts this module only as far as those residuals vanish.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::edge::{fundamental_solution, fundamental_solution_at, EdgeSolutionMatrix, RBoundary};
use crate::energy::ComplexEnergy;
use crate::error::{Error, Result};
use crate::quad;
use crate::tree::TruncatedQuantumTree;

/// How truncation leaves are closed off.
#[derive(Clone, Debug)]
pub enum LeafRule {
    /// Each unexpanded child is replaced by a free half-line: contributes
    /// i√z to the leaf's vertex sum. The exact closure of the free line.
    FreeHalfLine,
    /// ψ = 0 at the leaf vertex itself (R⁺(t_b) = ∞).
    Dirichlet,
    /// Per-label seeds for the unexpanded children's origin values, e.g. the
    /// exact infinite-tree values from the cone solver. With exact seeds the
    /// recursion reproduces the infinite-tree values at every depth.
    PerLabel(Vec<Complex64>),
    /// No missing children: the tree is a genuine finite quantum tree and
    /// leaves are ordinary vertices (vertex sum over an empty child set).
    Closed,
}

/// What sits behind the bottom point of the pendant root edge.
#[derive(Clone, Copy, Debug)]
pub enum RootRule {
    /// Nothing: Neumann end, R⁻(o_{b_o}) = 0.
    Closed,
    /// A free half-line lead: R⁻(o_{b_o}) = i√z.
    FreeHalfLine,
    /// Explicit backward seed.
    Value(Complex64),
}

#[derive(Clone, Debug)]
pub struct BoundaryRule {
    pub leaf: LeafRule,
    pub root: RootRule,
}

impl BoundaryRule {
    /// Free half-lines at every truncation surface (default).
    pub fn free_half_line() -> Self {
        BoundaryRule { leaf: LeafRule::FreeHalfLine, root: RootRule::FreeHalfLine }
    }

    pub fn dirichlet() -> Self {
        BoundaryRule { leaf: LeafRule::Dirichlet, root: RootRule::Closed }
    }

    pub fn closed() -> Self {
        BoundaryRule { leaf: LeafRule::Closed, root: RootRule::Closed }
    }

    /// Exact per-label seeds (forward) plus a backward seed at the root.
    pub fn per_label(seeds: Vec<Complex64>, root: RootRule) -> Self {
        BoundaryRule { leaf: LeafRule::PerLabel(seeds), root }
    }
}

/// All Weyl-Titchmarsh data of one truncated tree at one z. Vertices double
/// as their parent edges, so every per-edge array is indexed by vertex.
#[derive(Clone, Debug)]
pub struct WTState<'t> {
    pub tree: &'t TruncatedQuantumTree,
    pub z: ComplexEnergy,
    pub sqrt_z: Complex64,
    /// Fundamental solutions of each vertex's parent edge.
    pub sols: Vec<Option<EdgeSolutionMatrix>>,
    /// R⁺ at the edge origin (parent side).
    pub r_plus_origin: Vec<Complex64>,
    /// R⁺ at the edge terminus = the vertex value Σ children − α (or seed);
    /// infinite for Dirichlet-closed leaves.
    pub r_plus_terminus: Vec<Complex64>,
    /// R⁻ at the edge origin.
    pub r_minus_origin: Vec<Complex64>,
    /// R⁻ at the edge terminus.
    pub r_minus_terminus: Vec<Complex64>,
    /// ζ(b) = C + R⁺(o_b) S.
    pub zeta: Vec<Complex64>,
    /// ζ(b̂) = S' + R⁻(t_b) S.
    pub zeta_rev: Vec<Complex64>,
    pub boundary: BoundaryRule,
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct SolKey(u64, Vec<u64>);

fn sol_key(length: f64, potential: &crate::potential::PotentialSpec) -> SolKey {
    use crate::potential::PotentialSpec as P;
    let tail = match potential {
        P::Zero => vec![0],
        P::Constant { c } => vec![1, c.to_bits()],
        P::Cosine { c1, c2 } => vec![2, c1.to_bits(), c2.to_bits()],
        P::Sampled { values } => {
            let mut v = vec![3];
            v.extend(values.iter().map(|x| x.to_bits()));
            v
        }
    };
    SolKey(length.to_bits(), tail)
}

/// Runs the two-pass recursion and assembles the full state.
///
/// Requires Im z > 0, or Im z = 0 with every edge off the Dirichlet guard
/// zone (the real-axis case is meaningful with in-band per-label seeds).
pub fn wt_recursion<'t>(
    tree: &'t TruncatedQuantumTree,
    z: ComplexEnergy,
    boundary: BoundaryRule,
) -> Result<WTState<'t>> {
    let n = tree.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty tree".into()));
    }
    let sqrt_z = z.sqrt();
    let i_sqrt_z = Complex64::i() * sqrt_z;

    // fundamental solutions, cached per distinct (length, potential)
    let mut cache: HashMap<SolKey, EdgeSolutionMatrix> = HashMap::new();
    let mut sols: Vec<Option<EdgeSolutionMatrix>> = vec![None; n];
    for v in 0..n {
        if let Some(edge) = &tree.vertex(v).edge {
            let key = sol_key(edge.length, &edge.potential);
            let m = match cache.get(&key) {
                Some(m) => *m,
                None => {
                    let m = fundamental_solution(&edge.potential, edge.length, z)?;
                    if z.on_axis() && m.s.norm() < 1e-9 {
                        return Err(Error::DirichletProximity {
                            lambda: z.lambda(),
                            dist: m.s.norm(),
                            guard: 1e-9,
                        });
                    }
                    cache.insert(key.clone(), m);
                    m
                }
            };
            sols[v] = Some(m);
        }
    }

    let nanc = Complex64::new(f64::NAN, f64::NAN);
    let mut r_plus_origin = vec![nanc; n];
    let mut r_plus_terminus = vec![nanc; n];

    // upward pass: leaves to root
    for v in tree.post_order() {
        let vert = tree.vertex(v);
        let dirichlet_leaf =
            matches!(boundary.leaf, LeafRule::Dirichlet) && vert.children.is_empty();
        if dirichlet_leaf {
            r_plus_terminus[v] = Complex64::new(f64::INFINITY, 0.0);
        } else {
            let mut sum = Complex64::new(-vert.alpha, 0.0);
            for &c in &vert.children {
                sum += r_plus_origin[c];
            }
            match &boundary.leaf {
                LeafRule::FreeHalfLine => {
                    sum += vert.missing_children.len() as f64 * i_sqrt_z;
                }
                LeafRule::PerLabel(seeds) => {
                    for &k in &vert.missing_children {
                        let seed = seeds.get(k).ok_or_else(|| {
                            Error::InvalidInput(format!("no seed for label {k}"))
                        })?;
                        sum += seed;
                    }
                }
                LeafRule::Closed | LeafRule::Dirichlet => {}
            }
            r_plus_terminus[v] = sum;
        }
        if let Some(m) = &sols[v] {
            let rt = if r_plus_terminus[v].is_finite() {
                RBoundary::Finite(r_plus_terminus[v])
            } else {
                RBoundary::Infinity
            };
            r_plus_origin[v] = m.pull_back_rplus(rt);
        }
    }

    // downward pass: root to leaves
    let mut r_minus_origin = vec![nanc; n];
    let mut r_minus_terminus = vec![nanc; n];
    let root = tree.root();
    let root_seed = match boundary.root {
        RootRule::Closed => Complex64::new(0.0, 0.0),
        RootRule::FreeHalfLine => i_sqrt_z,
        RootRule::Value(v) => v,
    };
    match &sols[root] {
        Some(m) => {
            r_minus_origin[root] = root_seed;
            r_minus_terminus[root] = m.push_forward_rminus(root_seed);
        }
        None => {
            // no pendant root edge: the seed acts directly at the root vertex
            r_minus_terminus[root] = root_seed;
        }
    }
    for v in 0..n {
        let vert = tree.vertex(v);
        if vert.children.is_empty() {
            continue;
        }
        let mut all = r_minus_terminus[v] - vert.alpha;
        for &c in &vert.children {
            all += r_plus_origin[c];
        }
        for &c in &vert.children {
            r_minus_origin[c] = all - r_plus_origin[c];
            let m = sols[c].as_ref().expect("non-root vertex owns an edge");
            r_minus_terminus[c] = m.push_forward_rminus(r_minus_origin[c]);
        }
    }

    // multipliers
    let mut zeta = vec![nanc; n];
    let mut zeta_rev = vec![nanc; n];
    for v in 0..n {
        if let Some(m) = &sols[v] {
            zeta[v] = m.c + r_plus_origin[v] * m.s;
            zeta_rev[v] = m.sp + r_minus_terminus[v] * m.s;
        }
    }

    let state = WTState {
        tree,
        z,
        sqrt_z,
        sols,
        r_plus_origin,
        r_plus_terminus,
        r_minus_origin,
        r_minus_terminus,
        zeta,
        zeta_rev,
        boundary,
    };

    if z.eta() > 0.0 {
        state.check_herglotz()?;
    }
    Ok(state)
}

impl<'t> WTState<'t> {
    /// R⁺ at a vertex (the value entering 1/G = −(R⁺+R⁻)).
    pub fn r_plus_vertex(&self, v: usize) -> Complex64 {
        self.r_plus_terminus[v]
    }

    pub fn r_minus_vertex(&self, v: usize) -> Complex64 {
        self.r_minus_terminus[v]
    }

    fn check_herglotz(&self) -> Result<()> {
        let eta = self.z.eta();
        let tol = -1e-9;
        for v in 0..self.tree.len() {
            for (name, val) in [
                ("R+ origin", self.r_plus_origin[v]),
                ("R+ terminus", self.r_plus_terminus[v]),
                ("R- origin", self.r_minus_origin[v]),
                ("R- terminus", self.r_minus_terminus[v]),
            ] {
                if val.is_finite() && val.im < tol {
                    return Err(Error::HerglotzViolation {
                        context: format!("{name} at vertex {v}"),
                        im: val.im,
                        eta,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Diagonal Green value; poles (vanishing R⁺+R⁻) are tagged rather than
/// thrown so spectral scans can log eigenvalue candidates.
#[derive(Clone, Copy, Debug)]
pub enum DiagGreen {
    Value(Complex64),
    Pole,
}

impl DiagGreen {
    pub fn value(&self) -> Option<Complex64> {
        match self {
            DiagGreen::Value(v) => Some(*v),
            DiagGreen::Pole => None,
        }
    }

    pub fn expect_value(&self) -> Complex64 {
        self.value().expect("diagonal Green pole")
    }
}

/// G(v,v) = −1/(R⁺(v) + R⁻(v)).
pub fn green_diag(state: &WTState, v: usize) -> DiagGreen {
    let denom = state.r_plus_terminus[v] + state.r_minus_terminus[v];
    if !denom.is_finite() || denom.norm() < 1e-12 {
        DiagGreen::Pole
    } else {
        DiagGreen::Value(-1.0 / denom)
    }
}

/// Green value at the free bottom point of the pendant root edge.
pub fn green_diag_root_origin(state: &WTState) -> Result<DiagGreen> {
    let root = state.tree.root();
    if state.sols[root].is_none() {
        return Err(Error::InvalidInput("tree has no pendant root edge".into()));
    }
    let denom = state.r_plus_origin[root] + state.r_minus_origin[root];
    Ok(if denom.norm() < 1e-12 {
        DiagGreen::Pole
    } else {
        DiagGreen::Value(-1.0 / denom)
    })
}

/// Diagonal Green value at the origin vertex of the edge owned by v: the
/// parent vertex for ordinary edges, the free bottom point for the root edge.
fn green_at_edge_origin(state: &WTState, v: usize) -> Result<DiagGreen> {
    match state.tree.vertex(v).parent {
        Some(p) => Ok(green_diag(state, p)),
        None => green_diag_root_origin(state),
    }
}

/// Both product forms of the off-diagonal Green value along a vertex path:
/// forward G(a,a)·Πζ and reverse G(b,b)·Πζ̂. The two agree up to the residual
/// of the multiplicative identity.
#[derive(Clone, Copy, Debug)]
pub struct OffdiagGreen {
    pub forward: Complex64,
    pub reverse: Complex64,
}

/// Multiplier of the directed step u → w (consecutive, adjacent vertices).
fn step_multiplier(state: &WTState, u: usize, w: usize) -> Result<Complex64> {
    let tu = state.tree.vertex(u);
    let tw = state.tree.vertex(w);
    if tw.parent == Some(u) {
        Ok(state.zeta[w])
    } else if tu.parent == Some(w) {
        Ok(state.zeta_rev[u])
    } else {
        Err(Error::InvalidInput(format!("vertices {u} and {w} are not adjacent")))
    }
}

/// G(v₀, v_k) along an explicit non-backtracking vertex path.
pub fn green_offdiag(state: &WTState, path: &[usize]) -> Result<OffdiagGreen> {
    if path.len() < 2 {
        return Err(Error::InvalidInput("path needs at least two vertices".into()));
    }
    for (i, w) in path.windows(3).enumerate() {
        if w[0] == w[2] {
            return Err(Error::BacktrackingPath { step: i + 1 });
        }
    }
    let g_start = green_diag(state, path[0])
        .value()
        .ok_or(Error::Pole { vertex: path[0], denom: 0.0 })?;
    let g_end = green_diag(state, *path.last().unwrap())
        .value()
        .ok_or(Error::Pole { vertex: *path.last().unwrap(), denom: 0.0 })?;
    let mut forward = g_start;
    let mut reverse = g_end;
    for w in path.windows(2) {
        forward *= step_multiplier(state, w[0], w[1])?;
        reverse *= {
            // reversed step: multiplier of w[1] → w[0]
            step_multiplier(state, w[1], w[0])?
        };
    }
    Ok(OffdiagGreen { forward, reverse })
}

/// A point on the edge owned by `vertex`, at coordinate x ∈ [0, L] measured
/// from the edge origin (parent side).
#[derive(Clone, Copy, Debug)]
pub struct EdgePoint {
    pub vertex: usize,
    pub x: f64,
}

fn solution_at(
    state: &WTState,
    v: usize,
    x: f64,
) -> Result<EdgeSolutionMatrix> {
    let edge = state
        .tree
        .vertex(v)
        .edge
        .as_ref()
        .ok_or_else(|| Error::InvalidInput(format!("vertex {v} owns no edge")))?;
    fundamental_solution_at(&edge.potential, edge.length, x, state.z)
}

/// S(L)C(x) − C(L)S(x): the second interpolation weight, reducing to
/// S(L − x) for reflection-symmetric potentials but valid in general.
fn tilde_s(at_l: &EdgeSolutionMatrix, at_x: &EdgeSolutionMatrix) -> Complex64 {
    at_l.s * at_x.c - at_l.c * at_x.s
}

/// Green kernel between two interior points.
///
/// The same-edge case expands around the owning edge's endpoint values; the
/// different-edge case interpolates each coordinate to the edge endpoints and
/// multiplies along the connecting vertex path.
pub fn green_kernel(state: &WTState, x: EdgePoint, y: EdgePoint) -> Result<Complex64> {
    if x.vertex == y.vertex {
        let (lo, hi) = if x.x <= y.x { (x, y) } else { (y, x) };
        let v = x.vertex;
        let m_l = state.sols[v].as_ref().unwrap();
        let m_lo = solution_at(state, v, lo.x)?;
        let m_hi = solution_at(state, v, hi.x)?;
        let g_oo = green_at_edge_origin(state, v)?
            .value()
            .ok_or(Error::Pole { vertex: v, denom: 0.0 })?;
        let g_tt = green_diag(state, v)
            .value()
            .ok_or(Error::Pole { vertex: v, denom: 0.0 })?;
        let g_ot = g_oo * state.zeta[v];
        // expand the second argument to the endpoints, then the first
        let g_o_hi = (tilde_s(m_l, &m_hi) * g_oo + m_hi.s * g_ot) / m_l.s;
        let g_t_hi = (tilde_s(m_l, &m_hi) * g_ot + m_hi.s * g_tt) / m_l.s;
        Ok((tilde_s(m_l, &m_lo) * g_o_hi + m_lo.s * (g_t_hi + tilde_s(m_l, &m_hi))) / m_l.s)
    } else {
        let m_lx = state.sols[x.vertex].as_ref().unwrap();
        let m_ly = state.sols[y.vertex].as_ref().unwrap();
        let m_x = solution_at(state, x.vertex, x.x)?;
        let m_y = solution_at(state, y.vertex, y.x)?;
        let wx = [tilde_s(m_lx, &m_x) / m_lx.s, m_x.s / m_lx.s];
        let wy = [tilde_s(m_ly, &m_y) / m_ly.s, m_y.s / m_ly.s];
        // endpoint vertices of each edge: origin is the parent (or the root
        // port, which only the same-edge case can reach, so x.vertex and
        // y.vertex both have parents here unless one is the root edge)
        let ends = |v: usize| -> Vec<(Option<usize>, f64)> {
            match state.tree.vertex(v).parent {
                Some(p) => vec![(Some(p), 0.0), (Some(v), 1.0)],
                None => vec![(None, 0.0), (Some(v), 1.0)],
            }
        };
        let ex = ends(x.vertex);
        let ey = ends(y.vertex);
        let mut total = Complex64::new(0.0, 0.0);
        for (ix, &(ux, _)) in ex.iter().enumerate() {
            for (iy, &(uy, _)) in ey.iter().enumerate() {
                let g = vertex_pair_green(state, ux, uy, x.vertex, y.vertex)?;
                total += wx[ix] * wy[iy] * g;
            }
        }
        Ok(total)
    }
}

/// G(u, w) between endpoint vertices, where `None` denotes the root-edge
/// bottom port. The port appears only when one of the edges is the root edge.
fn vertex_pair_green(
    state: &WTState,
    u: Option<usize>,
    w: Option<usize>,
    edge_u: usize,
    edge_w: usize,
) -> Result<Complex64> {
    match (u, w) {
        (Some(a), Some(b)) => {
            if a == b {
                return green_diag(state, a)
                    .value()
                    .ok_or(Error::Pole { vertex: a, denom: 0.0 });
            }
            let path = state.tree.vertex_path(a, b);
            Ok(green_offdiag(state, &path)?.forward)
        }
        (None, None) => green_diag_root_origin(state)?
            .value()
            .ok_or(Error::Pole { vertex: state.tree.root(), denom: 0.0 }),
        (None, Some(b)) => {
            // port → b: down the root edge, then along the tree
            let root = state.tree.root();
            let g_port = green_diag_root_origin(state)?
                .value()
                .ok_or(Error::Pole { vertex: root, denom: 0.0 })?;
            let mut g = g_port * state.zeta[root];
            if b != root {
                let path = state.tree.vertex_path(root, b);
                for pair in path.windows(2) {
                    g *= step_multiplier(state, pair[0], pair[1])?;
                }
            }
            let _ = (edge_u, edge_w);
            Ok(g)
        }
        (Some(_), None) => vertex_pair_green(state, w, u, edge_w, edge_u),
    }
}

/// Residuals of the algebraic identities tying R±, ζ and G together.
#[derive(Clone, Debug)]
pub struct IdentityReport {
    pub rows: Vec<IdentityResidual>,
    /// min over edges of Im R⁺(o_b)/|ζ(b)|² − Σ_children Im R⁺; nonnegative
    /// for Im z ≥ 0 (the current inequality, equality on the axis).
    pub current_min_slack: f64,
}

#[derive(Clone, Debug)]
pub struct IdentityResidual {
    pub name: &'static str,
    pub max_abs: f64,
    pub worst_vertex: usize,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.max_abs).fold(0.0, f64::max)
    }

    pub fn row(&self, name: &str) -> Option<&IdentityResidual> {
        self.rows.iter().find(|r| r.name == name)
    }
}

/// Evaluates every identity on every applicable edge/vertex of the state and
/// reports the worst absolute residuals.
pub fn identity_suite(state: &WTState) -> IdentityReport {
    let n = state.tree.len();
    let mut rows: Vec<(&'static str, f64, usize)> = vec![
        ("rplus_transfer", 0.0, 0),
        ("rminus_transfer", 0.0, 0),
        ("vertex_sum", 0.0, 0),
        ("zeta_inverse", 0.0, 0),
        ("green_ratio", 0.0, 0),
        ("vertex_green", 0.0, 0),
        ("offdiag_dual", 0.0, 0),
    ];
    let mut bump = |rows: &mut Vec<(&'static str, f64, usize)>, idx: usize, val: f64, v: usize| {
        if val > rows[idx].1 {
            rows[idx].1 = val;
            rows[idx].2 = v;
        }
    };
    let mut current_min_slack = f64::INFINITY;

    for v in 0..n {
        let vert = state.tree.vertex(v);
        let Some(m) = &state.sols[v] else { continue };
        let finite_t = state.r_plus_terminus[v].is_finite();

        // R⁺(t) = S'/S − 1/(S ζ) and R⁻(o) = C/S − 1/(S ζ̂)
        if finite_t {
            let rhs = m.sp / m.s - 1.0 / (m.s * state.zeta[v]);
            bump(&mut rows, 0, (state.r_plus_terminus[v] - rhs).norm(), v);
        }
        if state.r_minus_origin[v].is_finite() {
            let rhs = m.c / m.s - 1.0 / (m.s * state.zeta_rev[v]);
            bump(&mut rows, 1, (state.r_minus_origin[v] - rhs).norm(), v);
        }

        // current inequality along the edge
        if finite_t {
            let slack = state.r_plus_origin[v].im / state.zeta[v].norm_sqr()
                - state.r_plus_terminus[v].im;
            current_min_slack = current_min_slack.min(slack);
        }

        // identities at the terminus vertex (needs real children)
        if !vert.children.is_empty() && vert.missing_children.is_empty() {
            let mut lhs = m.sp / m.s + vert.alpha;
            let mut zeta_over_s = Complex64::new(0.0, 0.0);
            for &c in &vert.children {
                let mc = state.sols[c].as_ref().unwrap();
                lhs += mc.c / mc.s;
                zeta_over_s += state.zeta[c] / mc.s;
            }
            let e1 = 1.0 / (state.zeta[v] * m.s) + zeta_over_s - lhs;
            bump(&mut rows, 2, e1.norm(), v);

            if let DiagGreen::Value(g_tt) = green_diag(state, v) {
                let e2 = zeta_over_s + state.zeta_rev[v] / m.s + 1.0 / g_tt - lhs;
                bump(&mut rows, 5, e2.norm(), v);
            }
        }

        // ζ-inverse and Green-ratio identities on the edge
        if let (DiagGreen::Value(g_tt), Ok(DiagGreen::Value(g_oo))) =
            (green_diag(state, v), green_at_edge_origin(state, v))
        {
            let zi = 1.0 / state.zeta[v] - state.zeta_rev[v] - m.s / g_tt;
            bump(&mut rows, 3, zi.norm(), v);
            let gr = state.zeta_rev[v] / state.zeta[v] - g_oo / g_tt;
            bump(&mut rows, 4, gr.norm(), v);
        }
    }

    // multiplicative property along root-to-leaf and leaf-to-leaf paths
    let leaves: Vec<usize> = (0..n).filter(|&v| state.tree.is_leaf(v)).collect();
    let mut paths: Vec<Vec<usize>> = Vec::new();
    for &l in leaves.iter().take(8) {
        if l != state.tree.root() {
            paths.push(state.tree.vertex_path(state.tree.root(), l));
        }
    }
    if leaves.len() >= 2 {
        paths.push(state.tree.vertex_path(leaves[0], leaves[leaves.len() - 1]));
    }
    for p in &paths {
        if p.len() < 2 {
            continue;
        }
        if let Ok(od) = green_offdiag(state, p) {
            bump(&mut rows, 6, (od.forward - od.reverse).norm(), p[0]);
        }
    }

    IdentityReport {
        rows: rows
            .into_iter()
            .map(|(name, max_abs, worst_vertex)| IdentityResidual { name, max_abs, worst_vertex })
            .collect(),
        current_min_slack,
    }
}

/// Im ⟨f, G f⟩ for a real function f supported on the edge owned by `v`,
/// through the boundary-value representation
///
///   Im⟨f, Gf⟩ = (Im R⁺ g⁻_f + Im R⁻ g⁺_f) / |R⁺ + R⁻|²,
///   g±_f = ⟨f, Re φ±⟩² + ⟨f, Im φ±⟩²,  φ±(x) = C(x) ± R± S(x),
///
/// with R± = R±(o_b). Valid on the real axis (λ + i0 states), where C and S
/// are real. Quadrature doubles the node count until the value stabilizes.
pub fn im_quadratic_form(state: &WTState, v: usize, f: &dyn Fn(f64) -> f64) -> Result<f64> {
    if !state.z.on_axis() {
        return Err(Error::InvalidInput(
            "the boundary-value form of Im⟨f,Gf⟩ is defined on the real axis".into(),
        ));
    }
    let edge = state
        .tree
        .vertex(v)
        .edge
        .as_ref()
        .ok_or_else(|| Error::InvalidInput(format!("vertex {v} owns no edge")))?;
    let length = edge.length;
    let r_plus = state.r_plus_origin[v];
    let r_minus = state.r_minus_origin[v];
    let denom = (r_plus + r_minus).norm_sqr();
    if denom < 1e-24 {
        return Err(Error::Pole { vertex: v, denom: denom.sqrt() });
    }

    let mut prev: Option<f64> = None;
    let mut nodes = 32usize;
    while nodes <= 512 {
        let phi = |x: f64, r: Complex64, sign: f64| -> Result<Complex64> {
            let m = solution_at(state, v, x)?;
            Ok(m.c + sign * r * m.s)
        };
        let comp = |which: fn(Complex64) -> f64, r: Complex64, sign: f64| -> Result<f64> {
            let mut err = None;
            let val = quad::integrate(
                &|x| match phi(x, r, sign) {
                    Ok(p) => f(x) * which(p),
                    Err(e) => {
                        err = Some(e);
                        0.0
                    }
                },
                length,
                nodes,
            );
            match err {
                Some(e) => Err(e),
                None => Ok(val),
            }
        };
        let re_p = comp(|c| c.re, r_plus, 1.0)?;
        let im_p = comp(|c| c.im, r_plus, 1.0)?;
        let re_m = comp(|c| c.re, r_minus, -1.0)?;
        let im_m = comp(|c| c.im, r_minus, -1.0)?;
        let g_plus = re_p * re_p + im_p * im_p;
        let g_minus = re_m * re_m + im_m * im_m;
        let val = (r_plus.im * g_minus + r_minus.im * g_plus) / denom;
        if let Some(p) = prev {
            if (val - p).abs() <= 1e-9 * (1.0 + val.abs()) {
                return Ok(val);
            }
        }
        prev = Some(val);
        nodes *= 2;
    }
    Err(Error::QuadratureFailure { change: prev.unwrap_or(f64::NAN) })
}

/// Direct double-quadrature of Im ∫∫ f(x) G(x,y) f(y) on one edge; the
/// independent cross-check of [`im_quadratic_form`].
pub fn im_quadratic_form_by_kernel(
    state: &WTState,
    v: usize,
    f: &dyn Fn(f64) -> f64,
    nodes: usize,
) -> Result<f64> {
    let edge = state
        .tree
        .vertex(v)
        .edge
        .as_ref()
        .ok_or_else(|| Error::InvalidInput(format!("vertex {v} owns no edge")))?;
    let length = edge.length;
    let (xs, ws) = quad::gauss_legendre(nodes);
    let half = 0.5 * length;
    let pts: Vec<f64> = xs.iter().map(|x| half * (x + 1.0)).collect();
    // kernel through φ±: G(x,y) = −φ⁻(x_<) φ⁺(x_>) / (R⁺ + R⁻)
    let r_plus = state.r_plus_origin[v];
    let r_minus = state.r_minus_origin[v];
    let mut phi_p = Vec::with_capacity(pts.len());
    let mut phi_m = Vec::with_capacity(pts.len());
    for &x in &pts {
        let m = solution_at(state, v, x)?;
        phi_p.push(m.c + r_plus * m.s);
        phi_m.push(m.c - r_minus * m.s);
    }
    let pref = -1.0 / (r_plus + r_minus);
    let mut total = 0.0;
    for i in 0..pts.len() {
        for j in 0..pts.len() {
            let (lo, hi) = if pts[i] <= pts[j] { (i, j) } else { (j, i) };
            let g = pref * phi_m[lo] * phi_p[hi];
            total += ws[i] * ws[j] * f(pts[i]) * f(pts[j]) * g.im;
        }
    }
    Ok(total * half * half)
}

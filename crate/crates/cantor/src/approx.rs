//! Realization and approximation of maps by prescribed digraph shapes.
//!
//! * [`realize`] turns a partition-labeled digraph without right ends into a
//!   prefix map whose transition digraph is exactly that digraph.
//! * [`edge_params`] / [`cover_params`] compute the bar lengths and loop
//!   periods needed to cover a digraph by balloons or dumbbells.
//! * [`shapes_onto`] builds `k` disjoint balloons or dumbbells together with
//!   a surjective graph map onto the digraph.
//! * [`refine_realize`] lifts a graph map onto `gr(f, Q)` to a refinement `P`
//!   and a map `g` with `gr(g, P)` the given digraph.
//! * [`approximate`] combines the above into an ε-approximation.

use crate::core::clopen::{mesh, Clopen};
use crate::core::partition::Partition;
use crate::core::prefix_map::{clopen_bijection, sup_dist, PrefixMap, Rule};
use crate::core::rat::Rat;
use crate::core::word::depth_cap;
use crate::digraph::{build_gr, check_graph_map, classify_all, ends, Digraph, GraphMap, Shape};
use crate::error::{Error, Result};
use num_integer::lcm;
use serde::{Deserialize, Serialize};

/// Upper bound on the number of partition cells a construction may create.
pub const CELL_BUDGET: u128 = 1 << 22;

/// A realization: the map and the union of the left-end cells.
#[derive(Clone, Debug)]
pub struct Realization {
    /// Homeomorphism from `2^ℕ` onto the complement of `x`.
    pub f: PrefixMap,
    /// Union of the left-end cells (not in the range of `f`).
    pub x: Clopen,
}

/// Realizes a partition-labeled digraph without right ends as a prefix map
/// `f` with `gr(f, P) = G`.
///
/// Each cell is split into one piece per outgoing edge (edges sorted by
/// target) and, unless it is a left end, into one piece per incoming edge
/// (edges sorted by source); the out-piece of each edge is mapped onto its
/// in-piece.
pub fn realize(g: &Digraph) -> Result<Realization> {
    let p = g
        .labels()
        .ok_or_else(|| Error::Precondition("realize needs a partition-labeled digraph".into()))?;
    let (left, right) = ends(g);
    if let Some(&v) = right.first() {
        return Err(Error::RightEnd(v));
    }
    let n = g.vertex_count();
    let mut out_pieces: Vec<Vec<Clopen>> = Vec::with_capacity(n);
    let mut in_pieces: Vec<Vec<Clopen>> = Vec::with_capacity(n);
    for v in 0..n {
        out_pieces.push(p.cell(v).split(g.succ(v).len())?);
        let k = g.pred(v).len();
        in_pieces.push(if k == 0 { vec![] } else { p.cell(v).split(k)? });
    }
    let mut rules: Vec<Rule> = Vec::new();
    for &(a, b) in g.edges() {
        let i = g.succ(a).binary_search(&b).expect("edge");
        let j = g.pred(b).binary_search(&a).expect("edge");
        rules.extend(clopen_bijection(&out_pieces[a][i], &in_pieces[b][j])?);
    }
    let f = PrefixMap::new(rules)?;
    let x = Clopen::union_all(left.iter().map(|&v| p.cell(v)));
    Ok(Realization { f, x })
}

/// Which covering shape is requested.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    /// Balloons of type `(s, m)`.
    Balloon,
    /// Dumbbells of type `(n, s, m)`.
    Dumbbell,
}

/// Per-edge covering data: a walk through the edge that closes into a
/// pseudo-loop on the right (and, for dumbbells, on the left).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeParams {
    /// Least legal bar length.
    pub s: usize,
    /// Right pseudo-loop length.
    pub m: usize,
    /// Left pseudo-loop length (dumbbells only).
    pub n: Option<usize>,
    /// Forward walk `Z(0), Z(1), …` up to just before the first repetition.
    pub forward: Vec<usize>,
    /// Index in `forward` where the right pseudo-loop starts.
    pub right_start: usize,
    /// Backward walk `Z(0), Z(-1), …` (dumbbells only).
    pub backward: Vec<usize>,
    /// Index in `backward` where the left pseudo-loop starts.
    pub left_start: usize,
}

impl EdgeParams {
    /// The bi-infinite walk `Z(k)` (eventually periodic in both directions).
    pub fn z(&self, k: i64) -> usize {
        if k >= 0 {
            let k = k as usize;
            let (i, m) = (self.right_start, self.forward.len() - self.right_start);
            if k < self.forward.len() {
                self.forward[k]
            } else {
                self.forward[i + (k - i) % m]
            }
        } else {
            let k = (-k) as usize;
            let (i, n) = (self.left_start, self.backward.len() - self.left_start);
            if k < self.backward.len() {
                self.backward[k]
            } else {
                self.backward[i + (k - i) % n]
            }
        }
    }
}

/// Walks from `start` (first stepping to `first`, if given) choosing, at
/// each step, the most recently visited vertex among the candidates already
/// on the walk, and otherwise the smallest candidate. Returns the walk and
/// the index the closing step returns to.
fn closing_walk(
    start: usize,
    first: Option<usize>,
    next: impl Fn(usize) -> Vec<usize>,
) -> Result<(Vec<usize>, usize)> {
    let mut walk: Vec<usize> = vec![];
    let mut cand = start;
    loop {
        if let Some(i) = walk.iter().position(|&v| v == cand) {
            return Ok((walk, i));
        }
        walk.push(cand);
        if walk.len() == 1 {
            if let Some(f) = first {
                cand = f;
                continue;
            }
        }
        let options = next(cand);
        if options.is_empty() {
            return Err(Error::RightEnd(cand));
        }
        let on_walk = options
            .iter()
            .filter_map(|&o| walk.iter().rposition(|&v| v == o).map(|i| (i, o)))
            .max();
        cand = match on_walk {
            Some((_, o)) => o,
            None => options[0],
        };
    }
}

/// Covering data for the edge `e` of `g`.
pub fn edge_params(g: &Digraph, e: (usize, usize), kind: ShapeKind) -> Result<EdgeParams> {
    if !g.has_edge(e.0, e.1) {
        return Err(Error::Precondition(format!("{e:?} is not an edge")));
    }
    check_ends(g, kind)?;
    Ok(walk_params(g, e, kind))
}

/// Rejects right ends (and, for dumbbells, left ends).
fn check_ends(g: &Digraph, kind: ShapeKind) -> Result<()> {
    let (left, right) = ends(g);
    if let Some(&v) = right.first() {
        return Err(Error::RightEnd(v));
    }
    if kind == ShapeKind::Dumbbell {
        if let Some(&v) = left.first() {
            return Err(Error::Precondition(format!("left end at vertex {v}")));
        }
    }
    Ok(())
}

/// [`edge_params`] for an edge of a digraph already checked to be end-free.
fn walk_params(g: &Digraph, e: (usize, usize), kind: ShapeKind) -> EdgeParams {
    let walk = |first, next: &dyn Fn(usize) -> Vec<usize>| {
        closing_walk(e.0, first, next).expect("end-free digraph")
    };
    let (forward, i_r) = walk(Some(e.1), &|v| g.succ(v).to_vec());
    let m = forward.len() - i_r;
    match kind {
        ShapeKind::Balloon => EdgeParams {
            s: i_r.max(1),
            m,
            n: None,
            forward,
            right_start: i_r,
            backward: vec![e.0],
            left_start: 0,
        },
        ShapeKind::Dumbbell => {
            let (backward, i_l) = walk(None, &|v| g.pred(v).to_vec());
            let n = backward.len() - i_l;
            EdgeParams {
                s: i_l + i_r.max(1),
                m,
                n: Some(n),
                forward,
                right_start: i_r,
                backward,
                left_start: i_l,
            }
        }
    }
}

/// Covering parameters of a whole digraph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverParams {
    /// Number of shapes (at least the number of edges).
    pub k: usize,
    /// Bar length.
    pub s: usize,
    /// Right loop length.
    pub m: usize,
    /// Left loop length (dumbbells only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

/// `K` = edge count, `S` = max per-edge bar, `M` (and `N`) = lcm of the
/// per-edge loop lengths.
pub fn cover_params(g: &Digraph, kind: ShapeKind) -> Result<CoverParams> {
    if g.edge_count() == 0 {
        return Err(Error::Precondition("digraph has no edges".into()));
    }
    let mut cp = CoverParams {
        k: g.edge_count(),
        s: 1,
        m: 1,
        n: (kind == ShapeKind::Dumbbell).then_some(1),
    };
    check_ends(g, kind)?;
    for &e in g.edges() {
        let ep = walk_params(g, e, kind);
        cp.s = cp.s.max(ep.s);
        cp.m = lcm(cp.m, ep.m);
        if let (Some(a), Some(b)) = (cp.n, ep.n) {
            cp.n = Some(lcm(a, b));
        }
    }
    Ok(cp)
}

/// Vertex layout of shape `i` in a disjoint union of identical shapes.
fn shape_vertices(kind: ShapeKind, s: usize, m: usize, n: usize) -> usize {
    match kind {
        ShapeKind::Balloon => s + m,
        ShapeKind::Dumbbell => n + s + m,
    }
}

/// Edges of one balloon `v_1..v_s, w_1..w_m` or dumbbell
/// `u_1..u_n, v_1..v_s, w_1..w_m`, offset by `base`.
pub fn shape_edges(kind: ShapeKind, s: usize, m: usize, n: usize, base: usize) -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    let lead = if kind == ShapeKind::Dumbbell { n } else { 0 };
    if kind == ShapeKind::Dumbbell {
        for k in 0..n {
            e.push((base + k, base + (k + 1) % n));
        }
        e.push((base, base + n));
    }
    let vs = base + lead;
    for k in 0..s - 1 {
        e.push((vs + k, vs + k + 1));
    }
    let ws = vs + s;
    e.push((vs + s - 1, ws));
    for k in 0..m {
        e.push((ws + k, ws + (k + 1) % m));
    }
    e
}

/// `k` disjoint shapes with a surjective graph map onto `g`; the `i`-th
/// shape covers the `i`-th edge (edges in lexicographic order), and shapes
/// beyond the edge count repeat the first one.
pub fn shapes_onto(
    g: &Digraph,
    kind: ShapeKind,
    k: usize,
    s: usize,
    m: usize,
    n: Option<usize>,
) -> Result<(Digraph, GraphMap)> {
    let cp = cover_params(g, kind)?;
    let n = match kind {
        ShapeKind::Balloon => 0,
        ShapeKind::Dumbbell => n.ok_or_else(|| Error::Precondition("dumbbells need n".into()))?,
    };
    let legal = k >= cp.k
        && s >= cp.s
        && m.is_multiple_of(cp.m)
        && m > 0
        && (kind == ShapeKind::Balloon || (n > 0 && n % cp.n.unwrap_or(1) == 0));
    if !legal {
        return Err(Error::Precondition(format!(
            "illegal shape parameters (k={k}, s={s}, m={m}, n={n}); need k ≥ {}, s ≥ {}, \
             m a multiple of {}{}",
            cp.k,
            cp.s,
            cp.m,
            cp.n.map(|x| format!(", n a multiple of {x}")).unwrap_or_default()
        )));
    }
    let size = shape_vertices(kind, s, m, n);
    let needed = (k as u128) * (size as u128);
    if needed > CELL_BUDGET {
        return Err(Error::Budget {
            what: format!("{k} shapes of {size} vertices"),
            needed,
            budget: CELL_BUDGET,
            feasible: 0,
        });
    }
    let edges: Vec<(usize, usize)> = g.edges().iter().copied().collect();
    let mut h_edges = Vec::new();
    let mut map = Vec::with_capacity(k * size);
    for i in 0..k {
        let e = edges[if i < edges.len() { i } else { 0 }];
        let ep = walk_params(g, e, kind);
        let base = i * size;
        h_edges.extend(shape_edges(kind, s, m, n, base));
        match kind {
            ShapeKind::Balloon => {
                for j in 1..=s {
                    map.push(ep.z(j as i64 - 1));
                }
                for j in 1..=m {
                    map.push(ep.z((s + j) as i64 - 1));
                }
            }
            ShapeKind::Dumbbell => {
                let p = -(ep.left_start as i64) - 1;
                map.push(ep.z(p));
                for j in 2..=n {
                    map.push(ep.z(p - n as i64 + j as i64 - 1));
                }
                for j in 1..=s {
                    map.push(ep.z(p + j as i64));
                }
                for j in 1..=m {
                    map.push(ep.z(p + (s + j) as i64));
                }
            }
        }
    }
    let h = Digraph::new(k * size, h_edges)?;
    let phi = GraphMap::new(h.clone(), g.unlabeled(), map)?;
    if let Err(e) = check_graph_map(&phi) {
        return Err(Error::Contract(format!("shape map breaks edge {e:?}")));
    }
    if !phi.is_surjective() || !phi.is_edge_surjective() {
        return Err(Error::Contract("shape map is not onto".into()));
    }
    Ok((h, phi))
}

/// Result of lifting a graph map to a refinement.
#[derive(Clone, Debug)]
pub struct Lift {
    /// The refinement `P` of `Q`.
    pub p: Partition,
    /// `psi[c]` is the vertex of `G` corresponding to cell `c` of `P`.
    pub psi: Vec<usize>,
    /// The new map with `gr(g, P) ≅ G` via `psi`.
    pub g: PrefixMap,
    /// `gr(g, P)`.
    pub graph: Digraph,
    /// `d̃(f, g)`.
    pub sup_dist: Rat,
    /// `mesh(Q) + mesh(f(Q))`.
    pub bound: Rat,
}

/// Lifts `φ : G → gr(f, Q)` (onto) to a refinement `P` of `Q`, a bijection
/// `ψ : P → V(G)` and a map `g` with `gr(g, P) = G`; each cell of `Q` is split
/// evenly among the vertices of its fiber, in ascending vertex order.
pub fn refine_realize(f: &PrefixMap, q: &Partition, g: &Digraph, phi: &GraphMap) -> Result<Lift> {
    let target = build_gr(f, q)?;
    if phi.target.edges() != target.edges() || phi.target.vertex_count() != target.vertex_count() {
        return Err(Error::Precondition("graph map does not target gr(f, Q)".into()));
    }
    if phi.source.edges() != g.edges() || phi.map.len() != g.vertex_count() {
        return Err(Error::Precondition("graph map does not start at G".into()));
    }
    if !phi.is_surjective() {
        return Err(Error::Precondition("graph map is not surjective".into()));
    }
    let mut fibers: Vec<Vec<usize>> = vec![Vec::new(); q.len()];
    for (v, &a) in phi.map.iter().enumerate() {
        fibers[a].push(v);
    }
    let mut piece_of = vec![Clopen::empty(); g.vertex_count()];
    for (a, fiber) in fibers.iter().enumerate() {
        for (piece, &v) in q.cell(a).split(fiber.len())?.into_iter().zip(fiber) {
            piece_of[v] = piece;
        }
    }
    let p = Partition::new(piece_of.clone())?;
    // Position of each vertex's cell in P's canonical order.
    let mut vertex_cell = vec![0usize; g.vertex_count()];
    let mut psi = vec![0usize; g.vertex_count()];
    for (v, c) in piece_of.iter().enumerate() {
        let i = p.cell_containing(c).expect("cell of P");
        vertex_cell[v] = i;
        psi[i] = v;
    }
    let labeled = Digraph::labeled(p.clone(), g.edges().iter().map(|&(a, b)| (vertex_cell[a], vertex_cell[b])))?;
    let r = realize(&labeled)?;
    let graph = build_gr(&r.f, &p)?;
    if graph.edges() != labeled.edges() {
        return Err(Error::Contract("realized digraph differs from G".into()));
    }
    let d = sup_dist(f, &r.f);
    let bound = q.mesh() + mesh(&f.image_family(q)?)?;
    if d > bound {
        return Err(Error::Contract(format!("lift distance {d} exceeds {bound}")));
    }
    Ok(Lift {
        p,
        psi,
        g: r.f,
        graph,
        sup_dist: d,
        bound,
    })
}

/// How [`approximate`] picks the depth of the uniform partition `Q = B_d`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QPolicy {
    /// `mesh(Q) < ε` and `mesh(f(Q)) < ε`. The metric is an ultrametric, so
    /// the lift distance is at most `max(mesh(Q), mesh(f(Q))) < ε`.
    #[default]
    Ultrametric,
    /// `mesh(Q) < ε/2` and `mesh(f(Q)) < ε/2`, so that the sum bound
    /// `mesh(Q) + mesh(f(Q)) < ε` holds on its own.
    Halved,
}

impl QPolicy {
    /// The strict upper bound both meshes must meet.
    pub fn threshold(self, eps: Rat) -> Rat {
        match self {
            QPolicy::Ultrametric => eps,
            QPolicy::Halved => eps.div_int(2),
        }
    }
}

/// Optional overrides of the shape parameters chosen by [`approximate`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Overrides {
    /// Number of shapes.
    pub k: Option<usize>,
    /// Bar length.
    pub s: Option<usize>,
    /// Right loop length.
    pub m: Option<usize>,
    /// Left loop length.
    pub n: Option<usize>,
    /// Depth policy for `Q`.
    #[serde(default)]
    pub q_policy: QPolicy,
}

/// Outcome of [`approximate`].
#[derive(Clone, Debug)]
pub struct Approximation {
    /// The approximating map.
    pub g: PrefixMap,
    /// The partition with `gr(g, P)` exactly `k` disjoint shapes.
    pub p: Partition,
    /// Depth `d` of the uniform partition `Q = B_d`.
    pub q_depth: usize,
    /// Minimal covering parameters of `gr(f, Q)`.
    pub cover: CoverParams,
    /// Parameters actually used.
    pub chosen: CoverParams,
    /// The shape every component has.
    pub shape: Shape,
    /// The lift (carries `ψ`, `d̃(f, g)` and the lift bound).
    pub lift: Lift,
}

/// Report of an approximation for front ends.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApproxReport {
    /// Depth of `Q`.
    pub q_depth: usize,
    /// Minimal covering parameters.
    pub cover: CoverParams,
    /// Parameters used.
    pub chosen: CoverParams,
    /// Component shape.
    pub shape: Shape,
    /// Number of components.
    pub components: usize,
    /// `d̃(f, g)`.
    pub sup_dist: Rat,
    /// `mesh(P)`.
    pub mesh_p: Rat,
    /// `mesh(Q) + mesh(f(Q))`.
    pub lift_bound: Rat,
}

impl Approximation {
    /// Summary for serialization.
    pub fn report(&self) -> ApproxReport {
        ApproxReport {
            q_depth: self.q_depth,
            cover: self.cover,
            chosen: self.chosen,
            shape: self.shape,
            components: self.chosen.k,
            sup_dist: self.lift.sup_dist,
            mesh_p: self.p.mesh(),
            lift_bound: self.lift.bound,
        }
    }
}

/// Smallest `d` with `mesh(B_d)` and `mesh(f(B_d))` below the policy's
/// threshold.
pub fn approximation_depth(f: &PrefixMap, eps: Rat, policy: QPolicy) -> Result<usize> {
    let bound = policy.threshold(eps);
    let mut d = 0usize;
    loop {
        if d > depth_cap() {
            return Err(Error::DepthOverflow {
                needed: d,
                cap: depth_cap(),
            });
        }
        if Rat::recip(d as u64 + 1) < bound {
            if (1u128 << d.min(127)) > CELL_BUDGET {
                return Err(Error::Budget {
                    what: format!("uniform partition of depth {d}"),
                    needed: 1u128 << d.min(127),
                    budget: CELL_BUDGET,
                    feasible: 0,
                });
            }
            let q = Partition::uniform(d)?;
            if mesh(&f.image_family(&q)?)? < bound {
                return Ok(d);
            }
        }
        d += 1;
    }
}

/// ε-approximates `f` by a map whose transition digraph on a partition of
/// mesh `< ε` is exactly `k` disjoint balloons or dumbbells.
///
/// `Q` is the uniform partition chosen by [`approximation_depth`] under
/// `ov.q_policy`. Without overrides the parameters are `k = K`, `s = S` and `m = M` for
/// balloons; dumbbells are made balanced with `n = m = lcm(N, M)`.
pub fn approximate(f: &PrefixMap, eps: Rat, kind: ShapeKind, ov: Overrides) -> Result<Approximation> {
    if eps.is_zero() {
        return Err(Error::Precondition("ε must be positive".into()));
    }
    if kind == ShapeKind::Dumbbell && !f.is_homeomorphism() {
        return Err(Error::Precondition("dumbbell approximation needs a homeomorphism".into()));
    }
    let q_depth = approximation_depth(f, eps, ov.q_policy)?;
    let q = Partition::uniform(q_depth)?;
    let gq = build_gr(f, &q)?;
    let cover = cover_params(&gq, kind)?;
    let balanced = lcm(cover.m, cover.n.unwrap_or(1));
    let chosen = CoverParams {
        k: ov.k.unwrap_or(cover.k),
        s: ov.s.unwrap_or(cover.s),
        m: ov.m.unwrap_or(match kind {
            ShapeKind::Balloon => cover.m,
            ShapeKind::Dumbbell => balanced,
        }),
        n: match kind {
            ShapeKind::Balloon => None,
            ShapeKind::Dumbbell => Some(ov.n.unwrap_or(balanced)),
        },
    };
    let (h, phi) = shapes_onto(&gq, kind, chosen.k, chosen.s, chosen.m, chosen.n)?;
    let lift = refine_realize(f, &q, &h, &phi)?;
    let shape = match kind {
        ShapeKind::Balloon => Shape::Balloon(chosen.s, chosen.m),
        ShapeKind::Dumbbell => Shape::Dumbbell(chosen.n.expect("dumbbell"), chosen.s, chosen.m),
    };
    let classes = classify_all(&lift.graph)?;
    if classes.len() != chosen.k || classes.iter().any(|(_, c)| c.shape != shape) {
        return Err(Error::Contract("approximation has the wrong component shapes".into()));
    }
    if lift.sup_dist >= eps || lift.p.mesh() >= eps {
        return Err(Error::Contract("approximation misses ε".into()));
    }
    Ok(Approximation {
        g: lift.g.clone(),
        p: lift.p.clone(),
        q_depth,
        cover,
        chosen,
        shape,
        lift,
    })
}

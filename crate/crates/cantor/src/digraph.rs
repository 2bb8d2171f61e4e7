//! Transition digraphs `gr(f, P)`, weak components, shape classification
//! (loop, balloon, dumbbell) and graph maps.
//!
//! Vertex ids are `0..n`. When a digraph is built from a partition the id of
//! a vertex is the index of its cell, so vertices are ordered
//! lexicographically by smallest cylinder word.

use crate::core::clopen::Clopen;
use crate::core::partition::Partition;
use crate::core::prefix_map::PrefixMap;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::fmt::Write as _;

/// A finite digraph on vertices `0..n`, optionally labeled by partition cells.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DigraphRepr")]
pub struct Digraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Partition>,
    #[serde(skip)]
    succ: Vec<Vec<usize>>,
    #[serde(skip)]
    pred: Vec<Vec<usize>>,
}

impl Digraph {
    /// Builds an unlabeled digraph; duplicate edges are ignored.
    pub fn new<I: IntoIterator<Item = (usize, usize)>>(n: usize, edges: I) -> Result<Digraph> {
        let edges: BTreeSet<(usize, usize)> = edges.into_iter().collect();
        if let Some(&(a, b)) = edges.iter().find(|&&(a, b)| a >= n || b >= n) {
            return Err(Error::Invalid(format!("edge ({a},{b}) out of range for {n} vertices")));
        }
        let mut g = Digraph {
            n,
            edges,
            labels: None,
            succ: vec![],
            pred: vec![],
        };
        g.index();
        Ok(g)
    }

    /// Builds a digraph whose vertices are the cells of `p`.
    pub fn labeled<I: IntoIterator<Item = (usize, usize)>>(p: Partition, edges: I) -> Result<Digraph> {
        let mut g = Digraph::new(p.len(), edges)?;
        g.labels = Some(p);
        Ok(g)
    }

    fn index(&mut self) {
        self.succ = vec![Vec::new(); self.n];
        self.pred = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            self.succ[a].push(b);
            self.pred[b].push(a);
        }
    }

    /// Number of vertices.
    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// Number of edges.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in lexicographic order.
    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    /// Whether `(a, b)` is an edge.
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a, b))
    }

    /// Successors of `v`, ascending.
    pub fn succ(&self, v: usize) -> &[usize] {
        &self.succ[v]
    }

    /// Predecessors of `v`, ascending.
    pub fn pred(&self, v: usize) -> &[usize] {
        &self.pred[v]
    }

    /// Cell labels, if any.
    pub fn labels(&self) -> Option<&Partition> {
        self.labels.as_ref()
    }

    /// Drops the labels.
    pub fn unlabeled(&self) -> Digraph {
        let mut g = self.clone();
        g.labels = None;
        g
    }

    /// The digraph with vertex `v` renamed `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Digraph> {
        Digraph::new(self.n, self.edges.iter().map(|&(a, b)| (perm[a], perm[b])))
    }

    /// The induced subgraph on `vertices` (sorted), renumbered `0..k`.
    pub fn induced(&self, vertices: &[usize]) -> Digraph {
        let pos = |v: usize| vertices.binary_search(&v).ok();
        let edges = vertices
            .iter()
            .enumerate()
            .flat_map(|(i, &a)| self.succ[a].iter().filter_map(move |&b| Some((i, pos(b)?))))
            .collect::<Vec<_>>();
        Digraph::new(vertices.len(), edges).expect("in range")
    }

    /// Disjoint union; vertices of `other` are shifted by `self.vertex_count()`.
    pub fn disjoint_union(&self, other: &Digraph) -> Digraph {
        let k = self.n;
        Digraph::new(
            self.n + other.n,
            self.edges
                .iter()
                .copied()
                .chain(other.edges.iter().map(|&(a, b)| (a + k, b + k))),
        )
        .expect("in range")
    }
}

#[derive(Deserialize)]
struct DigraphRepr {
    n: usize,
    edges: Vec<(usize, usize)>,
    #[serde(default)]
    labels: Option<Partition>,
}

impl TryFrom<DigraphRepr> for Digraph {
    type Error = Error;
    fn try_from(r: DigraphRepr) -> Result<Digraph> {
        match r.labels {
            Some(p) if p.len() != r.n => Err(Error::Invalid("label count differs from n".into())),
            Some(p) => Digraph::labeled(p, r.edges),
            None => Digraph::new(r.n, r.edges),
        }
    }
}

/// `gr(f, P)`: one vertex per cell, an edge `a → b` iff `f(a) ∩ b ≠ ∅`.
pub fn build_gr(f: &PrefixMap, p: &Partition) -> Result<Digraph> {
    let mut edges = Vec::new();
    for (i, a) in p.cells().iter().enumerate() {
        let img = f.image(a)?;
        edges.extend(p.cells_meeting(&img).into_iter().map(|j| (i, j)));
    }
    Digraph::labeled(p.clone(), edges)
}

/// A weak component: its vertices (ascending global ids) and the induced
/// subgraph on local ids `0..k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    /// Global vertex ids, ascending.
    pub vertices: Vec<usize>,
    /// The induced subgraph, local vertex `i` being `vertices[i]`.
    pub graph: Digraph,
}

impl Component {
    /// Translates a local id to a global one.
    pub fn global(&self, local: usize) -> usize {
        self.vertices[local]
    }

    /// Classifies the component; the labeling uses global ids.
    pub fn classify(&self) -> Result<Classification> {
        let c = classify(&self.graph)?;
        Ok(c.map_ids(|v| self.vertices[v]))
    }
}

/// Weak components, ordered by smallest vertex id.
pub fn components(g: &Digraph) -> Vec<Component> {
    let mut comp = vec![usize::MAX; g.n];
    let mut out = Vec::new();
    for start in 0..g.n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut stack = vec![start];
        comp[start] = id;
        let mut vs = vec![];
        while let Some(v) = stack.pop() {
            vs.push(v);
            for &x in g.succ[v].iter().chain(g.pred[v].iter()) {
                if comp[x] == usize::MAX {
                    comp[x] = id;
                    stack.push(x);
                }
            }
        }
        vs.sort_unstable();
        out.push(vs);
    }
    out.into_iter()
        .map(|vertices| Component {
            graph: g.induced(&vertices),
            vertices,
        })
        .collect()
}

/// Shape of a weak component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Shape {
    /// A cycle of `n` vertices.
    Loop(usize),
    /// A path of `s ≥ 1` vertices into a cycle of `t` vertices.
    Balloon(usize, usize),
    /// A cycle of `r`, a bar of `s ≥ 1` vertices and a cycle of `t`.
    Dumbbell(usize, usize, usize),
    /// Anything else.
    Other,
}

impl Shape {
    /// Plate weight of a balanced dumbbell.
    pub fn plate_weight(&self) -> Option<usize> {
        match *self {
            Shape::Dumbbell(r, _, t) if r == t => Some(r),
            _ => None,
        }
    }

    /// Whether the shape is a dumbbell with equal loop lengths.
    pub fn is_balanced(&self) -> bool {
        self.plate_weight().is_some()
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Loop(n) => write!(f, "Loop({n})"),
            Shape::Balloon(s, t) => write!(f, "Balloon({s},{t})"),
            Shape::Dumbbell(r, s, t) => write!(f, "Dumbbell({r},{s},{t})"),
            Shape::Other => write!(f, "Other"),
        }
    }
}

/// A shape together with its canonical vertex labeling.
///
/// * Loop: `u` is the cycle starting at its smallest vertex.
/// * Balloon: `v` is the path (`v[0]` has no incoming edge), `w` the cycle
///   starting at the vertex of in-degree 2.
/// * Dumbbell: `u` is the left cycle starting at the vertex of out-degree 2,
///   `v` the bar, `w` the right cycle starting at the vertex of in-degree 2.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    /// The shape.
    pub shape: Shape,
    /// Left cycle (or the cycle of a loop).
    pub u: Vec<usize>,
    /// Path or bar.
    pub v: Vec<usize>,
    /// Right cycle.
    pub w: Vec<usize>,
}

impl Classification {
    fn other() -> Classification {
        Classification {
            shape: Shape::Other,
            u: vec![],
            v: vec![],
            w: vec![],
        }
    }

    fn map_ids(self, f: impl Fn(usize) -> usize) -> Classification {
        Classification {
            shape: self.shape,
            u: self.u.into_iter().map(&f).collect(),
            v: self.v.into_iter().map(&f).collect(),
            w: self.w.into_iter().map(&f).collect(),
        }
    }

    /// The edge set the labeling describes.
    pub fn expected_edges(&self) -> BTreeSet<(usize, usize)> {
        let mut e = BTreeSet::new();
        let cycle = |xs: &[usize], e: &mut BTreeSet<(usize, usize)>| {
            for i in 0..xs.len() {
                e.insert((xs[i], xs[(i + 1) % xs.len()]));
            }
        };
        let path = |xs: &[usize], e: &mut BTreeSet<(usize, usize)>| {
            for p in xs.windows(2) {
                e.insert((p[0], p[1]));
            }
        };
        match self.shape {
            Shape::Loop(_) => cycle(&self.u, &mut e),
            Shape::Balloon(..) => {
                path(&self.v, &mut e);
                e.insert((*self.v.last().expect("s ≥ 1"), self.w[0]));
                cycle(&self.w, &mut e);
            }
            Shape::Dumbbell(..) => {
                cycle(&self.u, &mut e);
                e.insert((self.u[0], self.v[0]));
                path(&self.v, &mut e);
                e.insert((*self.v.last().expect("s ≥ 1"), self.w[0]));
                cycle(&self.w, &mut e);
            }
            Shape::Other => {}
        }
        e
    }

    /// All labeled vertices in walk order `u, v, w`.
    pub fn vertices(&self) -> Vec<usize> {
        self.u.iter().chain(&self.v).chain(&self.w).copied().collect()
    }
}

/// Follows unique out-edges from `start` until a vertex repeats or a vertex
/// with other than one successor is met (that vertex is not included).
fn follow(g: &Digraph, start: usize, stop: usize) -> Vec<usize> {
    let mut out = vec![];
    let mut seen = vec![false; g.n];
    let mut v = start;
    while v != stop && !seen[v] {
        seen[v] = true;
        out.push(v);
        if g.succ[v].len() != 1 {
            break;
        }
        v = g.succ[v][0];
    }
    out
}

/// Classifies a weakly connected digraph exactly; the labeling is verified
/// by rebuilding the edge set from it.
pub fn classify(c: &Digraph) -> Result<Classification> {
    if c.n == 0 || components(c).len() != 1 {
        return Err(Error::Precondition("classify expects a single weak component".into()));
    }
    let outd: Vec<usize> = (0..c.n).map(|v| c.succ[v].len()).collect();
    let ind: Vec<usize> = (0..c.n).map(|v| c.pred[v].len()).collect();
    let candidate = if outd.iter().all(|&d| d == 1) && ind.iter().all(|&d| d == 1) {
        let u = follow(c, 0, usize::MAX);
        Classification {
            shape: Shape::Loop(u.len()),
            u,
            v: vec![],
            w: vec![],
        }
    } else if outd.iter().all(|&d| d == 1) {
        let sources: Vec<usize> = (0..c.n).filter(|&v| ind[v] == 0).collect();
        if sources.len() != 1 {
            return Ok(Classification::other());
        }
        let walk = follow(c, sources[0], usize::MAX);
        let last = *walk.last().expect("nonempty");
        let w1 = c.succ[last][0];
        let split = walk.iter().position(|&x| x == w1).expect("walk closes on itself");
        if split == 0 {
            return Ok(Classification::other());
        }
        Classification {
            shape: Shape::Balloon(split, walk.len() - split),
            u: vec![],
            v: walk[..split].to_vec(),
            w: walk[split..].to_vec(),
        }
    } else {
        let branching: Vec<usize> = (0..c.n).filter(|&v| outd[v] == 2).collect();
        if branching.len() != 1 || outd.iter().any(|&d| d == 0 || d > 2) {
            return Ok(Classification::other());
        }
        let u1 = branching[0];
        // One successor returns to u1 (left loop), the other runs into the
        // right loop.
        let mut left = None;
        let mut right = None;
        for &x in &c.succ[u1] {
            if x == u1 {
                left = Some(vec![u1]);
                continue;
            }
            let walk = follow(c, x, u1);
            let last = *walk.last().expect("nonempty");
            if c.succ[last].len() == 1 && c.succ[last][0] == u1 {
                let mut l = vec![u1];
                l.extend(walk);
                left = Some(l);
            } else {
                right = Some(walk);
            }
        }
        let (Some(u), Some(walk)) = (left, right) else {
            return Ok(Classification::other());
        };
        let last = *walk.last().expect("nonempty");
        if c.succ[last].len() != 1 {
            return Ok(Classification::other());
        }
        let w1 = c.succ[last][0];
        let Some(split) = walk.iter().position(|&x| x == w1) else {
            return Ok(Classification::other());
        };
        if split == 0 {
            return Ok(Classification::other());
        }
        Classification {
            shape: Shape::Dumbbell(u.len(), split, walk.len() - split),
            u,
            v: walk[..split].to_vec(),
            w: walk[split..].to_vec(),
        }
    };
    let covered = candidate.vertices().len() == c.n;
    if covered && candidate.expected_edges() == c.edges {
        Ok(candidate)
    } else {
        Ok(Classification::other())
    }
}

/// Classifies every weak component (global ids).
pub fn classify_all(g: &Digraph) -> Result<Vec<(Component, Classification)>> {
    components(g)
        .into_iter()
        .map(|c| {
            let k = c.classify()?;
            Ok((c, k))
        })
        .collect()
}

/// Vertices with no incoming edge and vertices with no outgoing edge.
pub fn ends(g: &Digraph) -> (Vec<usize>, Vec<usize>) {
    let left = (0..g.n).filter(|&v| g.pred[v].is_empty()).collect();
    let right = (0..g.n).filter(|&v| g.succ[v].is_empty()).collect();
    (left, right)
}

/// A vertex map between digraphs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphMap {
    /// Source digraph.
    pub source: Digraph,
    /// Target digraph.
    pub target: Digraph,
    /// Image of each source vertex.
    pub map: Vec<usize>,
}

impl GraphMap {
    /// Builds a vertex map, checking totality and range (not edges).
    pub fn new(source: Digraph, target: Digraph, map: Vec<usize>) -> Result<GraphMap> {
        if map.len() != source.vertex_count() {
            return Err(Error::Invalid("vertex map is not total".into()));
        }
        if map.iter().any(|&x| x >= target.vertex_count()) {
            return Err(Error::Invalid("vertex map leaves the target".into()));
        }
        Ok(GraphMap {
            source,
            target,
            map,
        })
    }

    /// Whether every target vertex is hit.
    pub fn is_surjective(&self) -> bool {
        let mut hit = vec![false; self.target.vertex_count()];
        for &x in &self.map {
            hit[x] = true;
        }
        hit.into_iter().all(|b| b)
    }

    /// Whether every target edge is the image of a source edge.
    pub fn is_edge_surjective(&self) -> bool {
        let img: BTreeSet<(usize, usize)> = self
            .source
            .edges()
            .iter()
            .map(|&(a, b)| (self.map[a], self.map[b]))
            .collect();
        self.target.edges().iter().all(|e| img.contains(e))
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &GraphMap) -> Result<GraphMap> {
        GraphMap::new(
            self.source.clone(),
            other.target.clone(),
            self.map.iter().map(|&x| other.map[x]).collect(),
        )
    }
}

/// Checks edge preservation; on failure returns the offending source edge.
pub fn check_graph_map(phi: &GraphMap) -> std::result::Result<(), (usize, usize)> {
    for &(a, b) in phi.source.edges() {
        if !phi.target.has_edge(phi.map[a], phi.map[b]) {
            return Err((a, b));
        }
    }
    Ok(())
}

/// The containment map `gr(f, fine) → gr(f, coarse)`.
pub fn refinement_graph_map(f: &PrefixMap, fine: &Partition, coarse: &Partition) -> Result<GraphMap> {
    let map = fine.refinement_map(coarse)?;
    let phi = GraphMap::new(build_gr(f, fine)?, build_gr(f, coarse)?, map)?;
    if let Err(e) = check_graph_map(&phi) {
        return Err(Error::Contract(format!("refinement map breaks edge {e:?}")));
    }
    Ok(phi)
}

/// Renders the digraph in DOT with one cluster per weak component, labeled
/// by its shape. Vertices carry their cell antichains when labeled.
pub fn to_dot(g: &Digraph) -> Result<String> {
    let mut s = String::from("digraph gr {\n  node [shape=box];\n");
    for (i, (comp, class)) in classify_all(g)?.into_iter().enumerate() {
        let _ = writeln!(s, "  subgraph cluster_{i} {{");
        let _ = writeln!(s, "    label=\"{}\";", class.shape);
        let _ = writeln!(s, "    kind=\"{}\";", class.shape);
        for &v in &comp.vertices {
            let label = match g.labels() {
                Some(p) => clopen_label(p.cell(v)),
                None => v.to_string(),
            };
            let _ = writeln!(s, "    v{v} [label=\"{label}\"];");
        }
        s.push_str("  }\n");
    }
    for &(a, b) in g.edges() {
        let _ = writeln!(s, "  v{a} -> v{b};");
    }
    s.push_str("}\n");
    Ok(s)
}

fn clopen_label(c: &Clopen) -> String {
    let words: Vec<String> = c.cylinders().iter().map(|w| format!("{w:?}")).collect();
    format!("{{{}}}", words.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize, e: &[(usize, usize)]) -> Digraph {
        Digraph::new(n, e.iter().copied()).unwrap()
    }

    #[test]
    fn gr_examples() {
        let p = Partition::uniform(1).unwrap();
        let id = build_gr(&PrefixMap::identity(), &p).unwrap();
        assert_eq!(id.edges().len(), 2);
        assert_eq!(components(&id).len(), 2);
        let sw = build_gr(&PrefixMap::swap(), &p).unwrap();
        assert_eq!(classify(&sw.unlabeled()).unwrap().shape, Shape::Loop(2));
        let sh = build_gr(&PrefixMap::shift(), &p).unwrap();
        assert_eq!(sh.edge_count(), 4);
    }

    #[test]
    fn shapes() {
        assert_eq!(
            classify(&g(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)])).unwrap().shape,
            Shape::Loop(5)
        );
        let b = classify(&g(3, &[(0, 1), (1, 2), (2, 2)])).unwrap();
        assert_eq!(b.shape, Shape::Balloon(2, 1));
        let d = classify(&g(3, &[(0, 0), (0, 1), (1, 2), (2, 2)])).unwrap();
        assert_eq!(d.shape, Shape::Dumbbell(1, 1, 1));
        assert_eq!((d.u.clone(), d.v.clone(), d.w.clone()), (vec![0], vec![1], vec![2]));
        // u1 straight into w1 (empty bar) is not a dumbbell.
        assert_eq!(classify(&g(2, &[(0, 0), (0, 1), (1, 1)])).unwrap().shape, Shape::Other);
        assert_eq!(classify(&g(2, &[(0, 0), (0, 1), (1, 0), (1, 1)])).unwrap().shape, Shape::Other);
    }

    #[test]
    fn graph_maps() {
        let l2 = g(2, &[(0, 1), (1, 0)]);
        let l3 = g(3, &[(0, 1), (1, 2), (2, 0)]);
        for code in 0..9 {
            let phi = GraphMap::new(l2.clone(), l3.clone(), vec![code % 3, code / 3]).unwrap();
            assert!(check_graph_map(&phi).is_err());
        }
        let selfloop = g(1, &[(0, 0)]);
        let c = GraphMap::new(l3.clone(), selfloop, vec![0, 0, 0]).unwrap();
        assert!(check_graph_map(&c).is_ok());
    }

    #[test]
    fn end_sets() {
        assert_eq!(ends(&g(3, &[(0, 1), (1, 2), (2, 0)])), (vec![], vec![]));
        assert_eq!(ends(&g(2, &[(0, 1), (1, 1)])), (vec![0], vec![]));
        assert_eq!(ends(&g(1, &[])), (vec![0], vec![0]));
    }

    #[test]
    fn refinement_maps() {
        let fine = Partition::uniform(2).unwrap();
        let coarse = Partition::uniform(1).unwrap();
        let phi = refinement_graph_map(&PrefixMap::swap(), &fine, &coarse).unwrap();
        assert!(phi.is_surjective());
        assert!(check_graph_map(&phi).is_ok());
        assert!(refinement_graph_map(&PrefixMap::swap(), &coarse, &fine).is_err());
    }
}

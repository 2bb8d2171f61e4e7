//! Finite-stage witnesses for the generic homeomorphism and the generic
//! continuous map.
//!
//! * [`generic_hom`] builds a homeomorphism together with nested witnesses
//!   `(P_m, q_m)`: every component of `gr(h, P_m)` is a balanced dumbbell of
//!   plate weight `q_m!` carrying exact left and right loops.
//! * [`generic_cont`] builds a continuous map with nested witnesses whose
//!   components are strict balloons of type `(q_m!, q_m!)`.
//! * [`check_property_p`] / [`check_property_q`] re-verify a witness exactly.
//! * [`increase_bar`], [`h_regular`], [`subdumbbell_type`], [`f_admissible`]
//!   and [`subballoon_type`] are the partition manipulations used by the
//!   back-and-forth constructions.
//!
//! Both generators nest stages directly: stage `m + 1` is built inside the
//! cells of stage `m` from sub-shapes whose walks follow the coarse edges, so
//! every earlier witness is preserved exactly by the final map.

use crate::approx::{approximate, cover_params, realize, shape_edges, Overrides, ShapeKind, CELL_BUDGET};
use crate::core::clopen::{meet_by, Clopen, Meet};
use crate::core::partition::Partition;
use crate::core::prefix_map::{clopen_bijection, PrefixMap, Rule};
use crate::core::rat::Rat;
use crate::core::word::Word;
use crate::digraph::{build_gr, classify_all, Classification, Digraph, Shape};
use crate::error::{Error, Result};
use crate::sampling;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// How the stage parameters `q_m` are chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QSchedule {
    /// `q_m` is the least multiple of `m · q_{m-1}` with `q_m ≥ 2`
    /// (`q_0 = 1`): `2, 4, 12, 48, ...`.
    #[default]
    Strict,
    /// `q_m` is the least multiple of `m` with `q_m ≥ max(2, q_{m-1} + m - 1)`:
    /// `2, 4, 6, 12, ...`. Keeps `m! | q_{m+1}!/q_m!` and `q_m! | q_{m+1}!`
    /// but drops the requirement that `q_{m+1}` be a multiple of `m · q_m`.
    Relaxed,
}

impl QSchedule {
    /// The values `q_1, ..., q_{m_max}`.
    pub fn values(self, m_max: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(m_max);
        let mut prev = 1usize;
        for m in 1..=m_max {
            let next = match self {
                QSchedule::Strict => {
                    let step = m * prev;
                    step * 2usize.div_ceil(step)
                }
                QSchedule::Relaxed => 2usize.max(prev + m - 1).div_ceil(m) * m,
            };
            out.push(next);
            prev = next;
        }
        out
    }
}

/// `q!`, if it fits in a `u128`.
pub fn factorial(q: usize) -> Option<u128> {
    (1..=q as u128).try_fold(1u128, |acc, k| acc.checked_mul(k))
}

/// `q!` as a machine integer (plate weights must be enumerable).
fn plate(q: usize) -> Option<usize> {
    factorial(q).and_then(|x| usize::try_from(x).ok())
}

/// Outcome of a checker: `ok`, or the first failure found.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    /// Whether every check passed.
    pub ok: bool,
    /// Why the check failed.
    pub reason: Option<String>,
}

impl Verdict {
    /// A passing verdict.
    pub fn pass() -> Verdict {
        Verdict { ok: true, reason: None }
    }

    /// A failing verdict.
    pub fn fail(reason: impl Into<String>) -> Verdict {
        Verdict {
            ok: false,
            reason: Some(reason.into()),
        }
    }

    fn from(r: std::result::Result<(), String>) -> Verdict {
        match r {
            Ok(()) => Verdict::pass(),
            Err(e) => Verdict::fail(e),
        }
    }
}

/// A left loop `a ⊆ u_1` and a right loop `b ⊆ w_1` of one dumbbell.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopPair {
    /// Left loop: `h^r(a) = a`.
    pub a: Clopen,
    /// Right loop: `h^t(b) = b`.
    pub b: Clopen,
}

/// A stage witness for a homeomorphism: partition, parameter `q` and one
/// loop pair per component.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomWitness {
    /// The partition `P`.
    pub p: Partition,
    /// The stage parameter; the plate weight is `q!`.
    pub q: usize,
    /// One loop pair per component of `gr(h, P)`, in [`classify_all`] order.
    pub loops: Vec<LoopPair>,
}

/// A stage witness for a continuous map: partition and parameter `q`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContWitness {
    /// The partition `P`.
    pub p: Partition,
    /// The stage parameter; every balloon has type `(q!, q!)`.
    pub q: usize,
}

/// Output of [`generic_hom`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenericHom {
    /// The homeomorphism.
    pub h: PrefixMap,
    /// Witnesses for `m = 1, ..., m_max`.
    pub witnesses: Vec<HomWitness>,
}

/// Output of [`generic_cont`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenericCont {
    /// The continuous map.
    pub f: PrefixMap,
    /// Witnesses for `m = 1, ..., m_max`.
    pub witnesses: Vec<ContWitness>,
}

// ---------------------------------------------------------------------------
// Dumbbells as lists of cells
// ---------------------------------------------------------------------------

/// Position of a cell inside a dumbbell (0-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pos {
    /// `u_{i+1}` on the left loop.
    U(usize),
    /// `v_{i+1}` on the bar.
    V(usize),
    /// `w_{i+1}` on the right loop.
    W(usize),
}

/// A dumbbell given by its cells in walk order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumbbellCells {
    /// Left loop `u_1, ..., u_r` (`u_1` has out-degree 2).
    pub u: Vec<Clopen>,
    /// Bar `v_1, ..., v_s`.
    pub v: Vec<Clopen>,
    /// Right loop `w_1, ..., w_t` (`w_1` has in-degree 2).
    pub w: Vec<Clopen>,
}

impl DumbbellCells {
    /// The cells of a classified dumbbell component of `gr(·, P)`.
    pub fn from_class(p: &Partition, c: &Classification) -> Result<DumbbellCells> {
        if !matches!(c.shape, Shape::Dumbbell(..)) {
            return Err(Error::Shape(format!("component is {}, not a dumbbell", c.shape)));
        }
        let cells = |ids: &[usize]| ids.iter().map(|&i| p.cell(i).clone()).collect();
        Ok(DumbbellCells {
            u: cells(&c.u),
            v: cells(&c.v),
            w: cells(&c.w),
        })
    }

    /// Its type `Dumbbell(r, s, t)`.
    pub fn shape(&self) -> Shape {
        Shape::Dumbbell(self.u.len(), self.v.len(), self.w.len())
    }

    /// The cell at a position.
    pub fn get(&self, p: Pos) -> &Clopen {
        match p {
            Pos::U(i) => &self.u[i],
            Pos::V(i) => &self.v[i],
            Pos::W(i) => &self.w[i],
        }
    }

    /// All cells with their positions in walk order.
    pub fn positions(&self) -> impl Iterator<Item = (Pos, &Clopen)> {
        let u = self.u.iter().enumerate().map(|(i, c)| (Pos::U(i), c));
        let v = self.v.iter().enumerate().map(|(i, c)| (Pos::V(i), c));
        let w = self.w.iter().enumerate().map(|(i, c)| (Pos::W(i), c));
        u.chain(v).chain(w)
    }

    /// The union of all cells.
    pub fn support(&self) -> Clopen {
        Clopen::union_all(self.u.iter().chain(&self.v).chain(&self.w))
    }

    /// Increases the bar on the left: `u_1` is replaced by
    /// `u_1 ∩ h⁻¹(u_2)` (joining the loop) and `u_1 ∩ h⁻¹(v_1)` (joining the
    /// bar). The loop length is unchanged.
    pub fn increase_left(&self, h: &PrefixMap) -> Result<DumbbellCells> {
        let r = self.u.len();
        let u1 = &self.u[0];
        let a = u1.intersect(&h.preimage(&self.u[1 % r])?);
        let b = u1.intersect(&h.preimage(&self.v[0])?);
        if a.is_empty() || b.is_empty() || a.meets(&b) || a.union(&b) != *u1 {
            return Err(Error::Shape("left loop cell does not split along its two edges".into()));
        }
        let mut u = Vec::with_capacity(r);
        if r > 1 {
            u.push(self.u[r - 1].clone());
        }
        u.push(a);
        u.extend(self.u[1..r.saturating_sub(1).max(1)].iter().cloned());
        let mut v = vec![b];
        v.extend(self.v.iter().cloned());
        Ok(DumbbellCells { u, v, w: self.w.clone() })
    }

    /// Increases the bar on the right: `w_1` is replaced by `h(v_s)`
    /// (joining the bar) and `h(w_t)` (joining the loop).
    pub fn increase_right(&self, h: &PrefixMap) -> Result<DumbbellCells> {
        let t = self.w.len();
        let c = h.image(self.v.last().expect("bar is nonempty"))?;
        let e = h.image(&self.w[t - 1])?;
        if c.is_empty() || e.is_empty() || c.meets(&e) || c.union(&e) != self.w[0] {
            return Err(Error::Shape("right loop cell does not split along its two edges".into()));
        }
        let mut v = self.v.clone();
        v.push(c);
        let mut w: Vec<Clopen> = self.w[1..].to_vec();
        w.push(e);
        Ok(DumbbellCells { u: self.u.clone(), v, w })
    }

    /// A lookup from cells of finer partitions to positions.
    pub fn locator(&self) -> Locator<Pos> {
        Locator::new(self.positions().map(|(p, c)| (c, p)))
    }
}

/// Locates clopen sets inside a family of disjoint labeled clopen sets.
#[derive(Clone, Debug)]
pub struct Locator<T> {
    items: Vec<(Word, T)>,
}

impl<T: Copy + PartialEq> Locator<T> {
    /// Indexes the cylinders of the given disjoint sets.
    pub fn new<'a, I: IntoIterator<Item = (&'a Clopen, T)>>(sets: I) -> Locator<T> {
        let mut items: Vec<(Word, T)> = sets
            .into_iter()
            .flat_map(|(c, t)| c.cylinders().iter().map(move |w| (*w, t)))
            .collect();
        items.sort_by_key(|(w, _)| *w);
        Locator { items }
    }

    /// The label of the set containing `c`, if one set contains it.
    pub fn locate(&self, c: &Clopen) -> Option<T> {
        let mut found: Option<T> = None;
        for w in c.cylinders() {
            let t = match meet_by(&self.items, |x| x.0, w) {
                Meet::Inside(i) => self.items[i].1,
                Meet::Extensions(_) => return None,
            };
            match found {
                None => found = Some(t),
                Some(f) if f == t => {}
                Some(_) => return None,
            }
        }
        found
    }
}

/// `h^n(a)`.
pub(crate) fn iter_image(h: &PrefixMap, a: &Clopen, n: usize) -> Result<Clopen> {
    let mut x = a.clone();
    for _ in 0..n {
        x = h.image(&x)?;
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// Loops
// ---------------------------------------------------------------------------

/// New rules on the region `g^{r-1}(u_1 ∩ g⁻¹(u_2))` making `a` a left loop.
///
/// `a` is the least proper subcylinder of `D = u_1 ∩ g⁻¹(u_2)`, cut into five
/// pieces `x_j`; the rest of `D` and the rest of `u_1` are cut into five
/// pieces `s_j`, `o_j`. With `ρ = g^{r-1}` the new map sends `ρ(x_j)` onto
/// `x_{j+1}` and `ρ(s_j)` onto `s_{j+1} ∪ o_{j+1}` (indices mod 5), so that
/// `h^r(a) = a` while every periodic point has period at least `5r`.
fn left_loop(g: &PrefixMap, db: &DumbbellCells) -> Result<(Clopen, Vec<Rule>, Clopen)> {
    let r = db.u.len();
    let u1 = &db.u[0];
    let dom = u1.intersect(&g.preimage(&db.u[1 % r])?);
    let a = dom.least_proper_subcylinder()?;
    let xs = a.split(5)?;
    let ss = dom.difference(&a).split(5)?;
    let os = u1.difference(&dom).split(5)?;
    let mut rules = Vec::new();
    let mut region = Vec::new();
    for j in 0..5 {
        let k = (j + 1) % 5;
        let src = iter_image(g, &xs[j], r - 1)?;
        rules.extend(clopen_bijection(&src, &xs[k])?);
        region.push(src);
        let src = iter_image(g, &ss[j], r - 1)?;
        rules.extend(clopen_bijection(&src, &ss[k].union(&os[k]))?);
        region.push(src);
    }
    Ok((Clopen::union_all(&region), rules, a))
}

/// New rules on `w_t` making `b ⊆ g(w_t)` a right loop (mirror image of
/// [`left_loop`]): with `ρ = g^{t-1}`, `ρ(y_j) ↦ y_{j+1}` and
/// `ρ(s_j ∪ o_j) ↦ s_{j+1}`, where `y_j` cut `b`, `s_j` cut `g(w_t) ∖ b` and
/// `o_j` cut `w_1 ∖ g(w_t)`.
fn right_loop(g: &PrefixMap, db: &DumbbellCells) -> Result<(Clopen, Vec<Rule>, Clopen)> {
    let t = db.w.len();
    let w1 = &db.w[0];
    let gwt = g.image(&db.w[t - 1])?;
    let b = gwt.least_proper_subcylinder()?;
    let ys = b.split(5)?;
    let ss = gwt.difference(&b).split(5)?;
    let os = w1.difference(&gwt).split(5)?;
    let mut rules = Vec::new();
    let mut region = Vec::new();
    for j in 0..5 {
        let k = (j + 1) % 5;
        let src = iter_image(g, &ys[j], t - 1)?;
        rules.extend(clopen_bijection(&src, &ys[k])?);
        region.push(src);
        let src = iter_image(g, &ss[j].union(&os[j]), t - 1)?;
        rules.extend(clopen_bijection(&src, &ss[k])?);
        region.push(src);
    }
    Ok((Clopen::union_all(&region), rules, b))
}

/// Redefines a homeomorphism on the last cell of each loop so that every
/// balanced dumbbell of `gr(g, P)` carries a left and a right loop; the
/// digraph is unchanged.
pub fn attach_loops(g: &PrefixMap, p: &Partition) -> Result<PrefixMap> {
    Ok(attach_loops_certified(g, p)?.0)
}

/// [`attach_loops`], also returning each component's classification and its
/// loop pair.
pub fn attach_loops_certified(g: &PrefixMap, p: &Partition) -> Result<(PrefixMap, Vec<(Classification, LoopPair)>)> {
    if !g.is_homeomorphism() {
        return Err(Error::Precondition("attach_loops needs a homeomorphism".into()));
    }
    let gr = build_gr(g, p)?;
    let classes = classify_all(&gr)?;
    let mut regions = Vec::new();
    let mut rules = Vec::new();
    let mut out = Vec::with_capacity(classes.len());
    for (_, c) in classes {
        match c.shape {
            Shape::Dumbbell(r, _, t) if r == t => {}
            other => return Err(Error::Shape(format!("component is {other}, not a balanced dumbbell"))),
        }
        let db = DumbbellCells::from_class(p, &c)?;
        let (ra, rules_a, a) = left_loop(g, &db)?;
        let (rb, rules_b, b) = right_loop(g, &db)?;
        regions.push(ra);
        regions.push(rb);
        rules.extend(rules_a);
        rules.extend(rules_b);
        out.push((c, LoopPair { a, b }));
    }
    let keep = Clopen::union_all(&regions).complement();
    let mut all = g.restrict(&keep)?;
    all.extend(rules);
    let h = PrefixMap::new(all)?;
    if !h.is_homeomorphism() || build_gr(&h, p)?.edges() != gr.edges() {
        return Err(Error::Contract("attach_loops changed the digraph".into()));
    }
    for (c, lp) in &out {
        let n = c.u.len();
        if iter_image(&h, &lp.a, n)? != lp.a || iter_image(&h, &lp.b, n)? != lp.b {
            return Err(Error::Contract("attached loop does not return".into()));
        }
    }
    Ok((h, out))
}

// ---------------------------------------------------------------------------
// Property (P)
// ---------------------------------------------------------------------------

fn property_p(h: &PrefixMap, w: &HomWitness, m: usize) -> std::result::Result<(), String> {
    if m == 0 {
        return Err("m must be positive".into());
    }
    let mesh = w.p.mesh();
    if mesh >= Rat::recip(m as u64) {
        return Err(format!("mesh {mesh} is not below 1/{m}"));
    }
    if w.q == 0 || !w.q.is_multiple_of(m) {
        return Err(format!("q = {} is not a multiple of {m}", w.q));
    }
    let weight = plate(w.q).ok_or_else(|| format!("plate weight {}! is not enumerable", w.q))?;
    if !h.is_homeomorphism() {
        return Err("map is not a homeomorphism".into());
    }
    let gr = build_gr(h, &w.p).map_err(|e| e.to_string())?;
    let classes = classify_all(&gr).map_err(|e| e.to_string())?;
    if let Some((i, (_, c))) = classes.iter().enumerate().find(|(_, (_, c))| !matches!(c.shape, Shape::Dumbbell(..))) {
        return Err(format!("component {i} is {}, not a dumbbell", c.shape));
    }
    if w.loops.len() != classes.len() {
        return Err(format!("{} loop pairs for {} components", w.loops.len(), classes.len()));
    }
    for (i, (_, c)) in classes.iter().enumerate() {
        match c.shape {
            Shape::Dumbbell(r, _, t) if r == weight && t == weight => {}
            Shape::Dumbbell(..) => {
                return Err(format!("component {i} is {}, not of plate weight {weight}", c.shape))
            }
            other => return Err(format!("component {i} is {other}, not a dumbbell")),
        }
        let (u1, w1) = (w.p.cell(c.u[0]), w.p.cell(c.w[0]));
        let lp = w
            .loops
            .iter()
            .find(|lp| !lp.a.is_empty() && lp.a.is_subset(u1))
            .ok_or_else(|| format!("component {i} has no left loop inside u_1"))?;
        if lp.b.is_empty() || !lp.b.is_subset(w1) {
            return Err(format!("component {i}: right loop is not inside w_1"));
        }
        for (name, x) in [("left", &lp.a), ("right", &lp.b)] {
            let back = iter_image(h, x, weight).map_err(|e| e.to_string())?;
            if back != *x {
                return Err(format!("component {i}: {name} loop does not return after {weight} steps"));
            }
        }
    }
    Ok(())
}

/// Checks a homeomorphism witness for stage `m`: mesh `< 1/m`, `q` a
/// multiple of `m`, every component a balanced dumbbell of plate weight `q!`
/// and exact loops `h^{q!}(a) = a`, `h^{q!}(b) = b`.
pub fn check_property_p(h: &PrefixMap, w: &HomWitness, m: usize) -> Verdict {
    Verdict::from(property_p(h, w, m))
}

/// How consecutive witnesses are related.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Nesting {
    /// `P_{m+1}` refines `P_m` for every `m`.
    pub refines: bool,
    /// `q_{m+1}` is a multiple of `m · q_m` for every `m`.
    pub multiple: bool,
    /// `m! | q_{m+1}! / q_m!` for every `m`.
    pub factorial_ratio: bool,
    /// First failure, if any.
    pub reason: Option<String>,
}

/// Checks refinement and divisibility along a witness sequence given as
/// `(P_m, q_m)` pairs.
pub fn check_nesting<'a, I: IntoIterator<Item = (&'a Partition, usize)>>(stages: I) -> Nesting {
    let stages: Vec<(&Partition, usize)> = stages.into_iter().collect();
    let mut n = Nesting {
        refines: true,
        multiple: true,
        factorial_ratio: true,
        reason: None,
    };
    for (i, pair) in stages.windows(2).enumerate() {
        let m = i + 1;
        let ((p0, q0), (p1, q1)) = (pair[0], pair[1]);
        let note = |n: &mut Nesting, msg: String| {
            if n.reason.is_none() {
                n.reason = Some(msg);
            }
        };
        if !p1.refines(p0) {
            n.refines = false;
            note(&mut n, format!("P_{} does not refine P_{m}", m + 1));
        }
        if q1 % (m * q0) != 0 {
            n.multiple = false;
            note(&mut n, format!("q_{} = {q1} is not a multiple of {m}·q_{m} = {}", m + 1, m * q0));
        }
        let ratio_ok = q1 >= q0 && {
            let prod: Option<u128> = (q0 as u128 + 1..=q1 as u128).try_fold(1u128, |a, k| a.checked_mul(k));
            match (prod, factorial(m)) {
                (Some(p), Some(f)) => p % f == 0,
                // Any m consecutive integers have a product divisible by m!.
                _ => q1 - q0 >= m,
            }
        };
        if !ratio_ok {
            n.factorial_ratio = false;
            note(&mut n, format!("{m}! does not divide q_{}!/q_{m}!", m + 1));
        }
    }
    n
}

/// Nesting of a homeomorphism witness sequence.
pub fn hom_nesting(ws: &[HomWitness]) -> Nesting {
    check_nesting(ws.iter().map(|w| (&w.p, w.q)))
}

/// Nesting of a continuous-map witness sequence.
pub fn cont_nesting(ws: &[ContWitness]) -> Nesting {
    check_nesting(ws.iter().map(|w| (&w.p, w.q)))
}

// ---------------------------------------------------------------------------
// Bar increases, regularity and subdumbbell types
// ---------------------------------------------------------------------------

/// Which end of a bar to lengthen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Split `u_1`.
    Left,
    /// Split `w_1`.
    Right,
}

/// Replaces the cells of `old` by those of `new` in `p`.
fn replace_dumbbell(p: &Partition, old: &DumbbellCells, new: &DumbbellCells) -> Result<Partition> {
    let gone = old.support();
    let mut cells: Vec<Clopen> = p.cells().iter().filter(|c| !c.is_subset(&gone)).cloned().collect();
    cells.extend(new.positions().map(|(_, c)| c.clone()));
    Partition::new(cells)
}

/// Lengthens the bar of dumbbell component `component` of `gr(h, P)` (in
/// [`classify_all`] order) by one cell on the given side.
pub fn increase_bar(h: &PrefixMap, p: &Partition, component: usize, side: Side) -> Result<Partition> {
    let classes = classify_all(&build_gr(h, p)?)?;
    let (_, c) = classes
        .get(component)
        .ok_or_else(|| Error::Precondition(format!("no component {component}")))?;
    let db = DumbbellCells::from_class(p, c)?;
    let new = match side {
        Side::Left => db.increase_left(h)?,
        Side::Right => db.increase_right(h)?,
    };
    let q = replace_dumbbell(p, &db, &new)?;
    let after = classify_all(&build_gr(h, &q)?)?;
    let expected = match db.shape() {
        Shape::Dumbbell(r, s, t) => Shape::Dumbbell(r, s + 1, t),
        _ => unreachable!("checked above"),
    };
    let key = new.u[0].first_word();
    let ok = after.len() == classes.len()
        && after
            .iter()
            .any(|(_, c)| c.shape == expected && q.cell(c.u[0]).first_word() == key);
    if !ok {
        return Err(Error::Contract("bar increase did not produce the expected dumbbell".into()));
    }
    Ok(q)
}

/// Rounds of the invariant-core search in [`find_loop`].
const LOOP_ROUNDS: usize = 8;
/// Orbit length explored from each candidate cylinder in [`find_loop`].
const LOOP_ORBIT: usize = 64;
/// Candidate cylinders tried in [`find_loop`].
const LOOP_CANDIDATES: usize = 16;

/// Searches for a nonempty clopen `U ⊆ cell` with `F(U) = U`, `F = h^n`.
///
/// The cell is first shrunk by `A ↦ A ∩ F(A) ∩ F⁻¹(A)` for a few rounds;
/// then the forward orbit closure of each of its first cylinders is tried.
/// The search is bounded: `None` means no loop was found within the bound.
fn find_loop(h: &PrefixMap, cell: &Clopen, n: usize) -> Result<Option<Clopen>> {
    let fwd = |x: &Clopen| iter_image(h, x, n);
    let back = |x: &Clopen| -> Result<Clopen> {
        let mut y = x.clone();
        for _ in 0..n {
            y = h.preimage(&y)?;
        }
        Ok(y)
    };
    let mut a = cell.clone();
    for _ in 0..LOOP_ROUNDS {
        let next = a.intersect(&fwd(&a)?).intersect(&back(&a)?);
        if next.is_empty() {
            return Ok(None);
        }
        if next == a {
            return Ok(Some(a));
        }
        a = next;
    }
    for w in a.cylinders().iter().take(LOOP_CANDIDATES) {
        let mut u = Clopen::cylinder(*w);
        let mut s = u.clone();
        for _ in 0..LOOP_ORBIT {
            s = fwd(&s)?;
            if !s.is_subset(cell) {
                break;
            }
            if s.is_subset(&u) {
                if fwd(&u)? == u {
                    return Ok(Some(u));
                }
                break;
            }
            u = u.union(&s);
        }
    }
    Ok(None)
}

/// The common plate weight `w(h, P)` if every component of `gr(h, P)` is a
/// balanced dumbbell with a left and a right loop (found by a bounded
/// search) and all plate weights agree; otherwise `None`.
pub fn h_regular(h: &PrefixMap, p: &Partition) -> Result<Option<usize>> {
    let classes = classify_all(&build_gr(h, p)?)?;
    let mut weight = None;
    for (_, c) in &classes {
        let r = match c.shape {
            Shape::Dumbbell(r, _, t) if r == t => r,
            _ => return Ok(None),
        };
        if weight.is_some_and(|w| w != r) {
            return Ok(None);
        }
        weight = Some(r);
    }
    for (_, c) in &classes {
        let r = c.u.len();
        if find_loop(h, p.cell(c.u[0]), r)?.is_none() || find_loop(h, p.cell(c.w[0]), r)?.is_none() {
            return Ok(None);
        }
    }
    Ok(weight)
}

/// A subdumbbell type together with the normalized fine dumbbell.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubdumbbellType {
    /// 1: inside the left loop, 2: inside the right loop, 3: meets the bar.
    pub kind: u8,
    /// The fine dumbbell after normalization.
    pub dumbbell: DumbbellCells,
    /// The fine partition with the normalized dumbbell substituted.
    pub partition: Partition,
    /// Number of left bar increases applied.
    pub left_increases: usize,
    /// Number of right bar increases applied.
    pub right_increases: usize,
    /// Type 3 only: bar cells before the coarse bar (equal to the number
    /// after it once centered).
    pub margin: Option<usize>,
}

/// Normalization data returned by [`normalize_subdumbbell`].
#[derive(Clone, Debug)]
pub(crate) struct Normalized {
    pub kind: u8,
    pub db: DumbbellCells,
    pub left: usize,
    pub right: usize,
    pub margin: Option<usize>,
}

/// Classifies `fine` relative to `coarse` and normalizes it by bar increases:
/// `u'_1` is moved into `u_1` (type 1, 3) or `w_1` (type 2), `w'_1` into
/// `u_1` (type 1) or `w_1` (type 2, 3), and a type-3 bar is centered on the
/// coarse bar.
pub(crate) fn normalize_subdumbbell(h: &PrefixMap, fine: &DumbbellCells, coarse: &DumbbellCells) -> Result<Normalized> {
    let loc = coarse.locator();
    let pos = |c: &Clopen| {
        loc.locate(c)
            .ok_or_else(|| Error::NotRefinement(format!("fine cell {c} lies in no cell of the coarse dumbbell")))
    };
    let mut kind_u = false;
    let mut kind_v = false;
    let mut kind_w = false;
    for (_, c) in fine.positions() {
        match pos(c)? {
            Pos::U(_) => kind_u = true,
            Pos::V(_) => kind_v = true,
            Pos::W(_) => kind_w = true,
        }
    }
    let kind = match (kind_u, kind_v, kind_w) {
        (_, true, _) => 3,
        (true, false, false) => 1,
        (false, false, true) => 2,
        _ => return Err(Error::Contract("subdumbbell joins both loops without the bar".into())),
    };
    let period = coarse.u.len().max(coarse.w.len());
    let left_target = if kind == 2 { Pos::W(0) } else { Pos::U(0) };
    let right_target = if kind == 1 { Pos::U(0) } else { Pos::W(0) };
    let mut db = fine.clone();
    let (mut left, mut right) = (0, 0);
    while pos(&db.u[0])? != left_target {
        if left >= period {
            return Err(Error::Contract("left normalization does not terminate".into()));
        }
        db = db.increase_left(h)?;
        left += 1;
    }
    while pos(&db.w[0])? != right_target {
        if right >= period {
            return Err(Error::Contract("right normalization does not terminate".into()));
        }
        db = db.increase_right(h)?;
        right += 1;
    }
    let mut margin = None;
    if kind == 3 {
        let bar: Vec<Pos> = db.v.iter().map(pos).collect::<Result<_>>()?;
        let first = bar.iter().position(|p| matches!(p, Pos::V(_))).expect("type 3 meets the bar");
        let last = bar.iter().rposition(|p| matches!(p, Pos::V(_))).expect("type 3 meets the bar");
        let (r, r2) = (first, bar.len() - 1 - last);
        let diff = r.abs_diff(r2);
        if diff % period != 0 {
            return Err(Error::Contract("type-3 margins differ by a non-multiple of the plate weight".into()));
        }
        for _ in 0..diff {
            db = if r < r2 { db.increase_left(h)? } else { db.increase_right(h)? };
        }
        if r < r2 {
            left += diff;
        } else {
            right += diff;
        }
        margin = Some(r.max(r2));
    }
    Ok(Normalized {
        kind,
        db,
        left,
        right,
        margin,
    })
}

/// The type (1, 2 or 3) of dumbbell `d_fine` of `gr(h, P_fine)` inside
/// dumbbell `d_coarse` of `gr(h, P_coarse)` (indices in [`classify_all`]
/// order), normalized by bar increases.
pub fn subdumbbell_type(
    h: &PrefixMap,
    p_fine: &Partition,
    p_coarse: &Partition,
    d_fine: usize,
    d_coarse: usize,
) -> Result<SubdumbbellType> {
    let fine_classes = classify_all(&build_gr(h, p_fine)?)?;
    let coarse_classes = classify_all(&build_gr(h, p_coarse)?)?;
    let get = |cs: &Vec<(_, Classification)>, i: usize, which: &str| -> Result<Classification> {
        cs.get(i)
            .map(|(_, c)| c.clone())
            .ok_or_else(|| Error::Precondition(format!("no {which} component {i}")))
    };
    let fine = DumbbellCells::from_class(p_fine, &get(&fine_classes, d_fine, "fine")?)?;
    let coarse = DumbbellCells::from_class(p_coarse, &get(&coarse_classes, d_coarse, "coarse")?)?;
    let n = normalize_subdumbbell(h, &fine, &coarse)?;
    let partition = replace_dumbbell(p_fine, &fine, &n.db)?;
    Ok(SubdumbbellType {
        kind: n.kind,
        dumbbell: n.db,
        partition,
        left_increases: n.left,
        right_increases: n.right,
        margin: n.margin,
    })
}

// ---------------------------------------------------------------------------
// The generic homeomorphism
// ---------------------------------------------------------------------------

/// One dumbbell of the stage tower: plate weight, bar length and its cells
/// in local order `u, v, w`.
#[derive(Clone, Debug)]
struct HomNode {
    w: usize,
    s: usize,
    cells: Vec<Clopen>,
}

/// The four subdumbbells of a parent `(w, s, w)` with plate weight `wc`.
///
/// Type 1 winds around the left loop (bar `w - 1`), type 2 around the right
/// loop, and type 3 runs `4w` cells around the left loop, the whole parent
/// bar and `4w` cells around the right loop; type 3 appears twice so that
/// every parent cell, bar cells included, is split into at least two pieces
/// and the mesh strictly decreases. All are normalized:
/// `u'_1 ⊆ u_1` (type 2: `⊆ w_1`) and `w'_1 ⊆ u_1` / `w_1`.
fn children(w: usize, s: usize, wc: usize) -> [(usize, Vec<usize>); 4] {
    let u = |i: usize| i % w;
    let v = |j: usize| w + j;
    let r = |i: usize| w + s + i % w;
    let winding = |at: &dyn Fn(usize) -> usize| {
        let bar = w - 1;
        let mut pos: Vec<usize> = (0..wc).map(at).collect();
        pos.extend((1..=bar).map(at));
        pos.extend((1..=wc).map(|k| at(bar + k)));
        (bar, pos)
    };
    let one = winding(&u);
    let two = winding(&r);
    let margin = 4 * w;
    let mut pos: Vec<usize> = (0..wc).map(u).collect();
    pos.extend((1..=margin).map(u));
    pos.extend((0..s).map(v));
    pos.extend((0..margin).map(r));
    pos.extend((0..wc).map(r));
    let three = (2 * margin + s, pos);
    [one, two, three.clone(), three]
}

/// Cell counts of the nested stages: `(nodes, cells)` per stage, stopping
/// at the first stage exceeding the budget.
fn hom_sizes(k: usize, s1_total: usize, weights: &[Option<usize>]) -> std::result::Result<Vec<u128>, (usize, u128)> {
    let mut nodes = k as u128;
    let mut bars = s1_total as u128;
    let mut out = Vec::new();
    for (i, w) in weights.iter().enumerate() {
        let m = i + 1;
        let cells = w.and_then(|w| nodes.checked_mul(2 * w as u128)?.checked_add(bars));
        match cells {
            Some(c) if c <= CELL_BUDGET => out.push(c),
            other => return Err((m, other.unwrap_or(u128::MAX))),
        }
        let w = w.expect("checked") as u128;
        // Children of a (w, s, w) parent: bars w-1, w-1, 8w + s and 8w + s.
        bars = 2 * bars + nodes * (18 * w - 2);
        nodes *= 4;
    }
    Ok(out)
}

/// A random involution of the cylinders of length 2.
fn random_involution<R: Rng>(rng: &mut R) -> PrefixMap {
    let mut idx: Vec<usize> = (0..4).collect();
    idx.shuffle(rng);
    let pairs = rng.gen_range(0..=2);
    let mut sigma: Vec<usize> = (0..4).collect();
    for p in 0..pairs {
        let (a, b) = (idx[2 * p], idx[2 * p + 1]);
        sigma[a] = b;
        sigma[b] = a;
    }
    cylinder_map(&sigma)
}

/// The map sending the `i`-th cylinder of length 2 onto the `sigma[i]`-th.
fn cylinder_map(sigma: &[usize]) -> PrefixMap {
    let word = |i: usize| Word::from_raw((i as u128) << 126, 2).expect("depth 2");
    PrefixMap::new(sigma.iter().enumerate().map(|(i, &j)| Rule::new(word(i), word(j))).collect())
        .expect("complete rule system")
}

/// Splits every parent cell among the child vertices placed in it; the
/// assignment of pieces to child vertices is shuffled.
fn assign_cells<R: Rng>(rng: &mut R, parents: &[Vec<Clopen>], kids: &mut [(usize, Vec<usize>, Vec<Clopen>)]) -> Result<()> {
    let mut slots: Vec<Vec<Vec<(usize, usize)>>> = parents.iter().map(|c| vec![vec![]; c.len()]).collect();
    for (ci, (pi, pos, _)) in kids.iter().enumerate() {
        for (li, &x) in pos.iter().enumerate() {
            slots[*pi][x].push((ci, li));
        }
    }
    for (pi, cells) in parents.iter().enumerate() {
        for (x, cell) in cells.iter().enumerate() {
            let list = &mut slots[pi][x];
            if list.is_empty() {
                return Err(Error::Contract("a parent cell received no child vertex".into()));
            }
            list.shuffle(rng);
            for (piece, &(ci, li)) in cell.split(list.len())?.into_iter().zip(list.iter()) {
                kids[ci].2[li] = piece;
            }
        }
    }
    Ok(())
}

/// Builds a homeomorphism with nested property-(P) witnesses for
/// `m = 1, ..., m_max`.
///
/// Stage 1 approximates a random involution of the length-2 cylinders by
/// dumbbells of type `(2, s, 2)`; each later stage places one subdumbbell of
/// types 1 and 2 and two of type 3 inside every dumbbell of the previous stage. The finest stage is
/// realized, loops are attached, and the coarser loops are the orbit unions
/// of the finest ones. Fails with [`Error::Budget`] (reporting the largest
/// feasible `m_max`) when the finest stage would exceed [`CELL_BUDGET`].
pub fn generic_hom(m_max: usize, seed: u64, schedule: QSchedule) -> Result<GenericHom> {
    if m_max == 0 {
        return Err(Error::Precondition("m_max must be at least 1".into()));
    }
    let qs = schedule.values(m_max);
    let weights: Vec<Option<usize>> = qs.iter().map(|&q| plate(q)).collect();
    let mut rng = sampling::rng(seed);
    let f0 = random_involution(&mut rng);
    let ov = Overrides {
        n: Some(2),
        m: Some(2),
        ..Overrides::default()
    };
    let approx = approximate(&f0, Rat::recip(2), ShapeKind::Dumbbell, ov)?;
    let classes = classify_all(&approx.lift.graph)?;
    let mut stage: Vec<HomNode> = Vec::with_capacity(classes.len());
    for (_, c) in &classes {
        let db = DumbbellCells::from_class(&approx.p, c)?;
        stage.push(HomNode {
            w: db.u.len(),
            s: db.v.len(),
            cells: db.positions().map(|(_, c)| c.clone()).collect(),
        });
    }
    let s1: usize = stage.iter().map(|n| n.s).sum();
    hom_sizes(stage.len(), s1, &weights).map_err(|(m, needed)| Error::Budget {
        what: format!("generic_hom stage {m}"),
        needed,
        budget: CELL_BUDGET,
        feasible: m - 1,
    })?;
    let mut stages = vec![stage];
    for wc in weights.iter().skip(1) {
        let wc = wc.expect("sizes checked");
        let parents = stages.last().expect("stage 1");
        let mut kids: Vec<(usize, Vec<usize>, Vec<Clopen>)> = Vec::with_capacity(4 * parents.len());
        let mut bars = Vec::with_capacity(4 * parents.len());
        for (pi, node) in parents.iter().enumerate() {
            for (bar, pos) in children(node.w, node.s, wc) {
                let n = pos.len();
                kids.push((pi, pos, vec![Clopen::empty(); n]));
                bars.push(bar);
            }
        }
        let parent_cells: Vec<Vec<Clopen>> = parents.iter().map(|n| n.cells.clone()).collect();
        assign_cells(&mut rng, &parent_cells, &mut kids)?;
        let next = kids
            .into_iter()
            .zip(bars)
            .map(|((_, _, cells), s)| HomNode { w: wc, s, cells })
            .collect();
        stages.push(next);
    }

    // Realize the finest stage and attach loops.
    let finest = stages.last().expect("stage 1");
    let flat: Vec<Clopen> = finest.iter().flat_map(|n| n.cells.iter().cloned()).collect();
    let pm = Partition::new(flat.clone())?;
    let ids: Vec<usize> = flat
        .iter()
        .map(|c| pm.cell_containing(c).expect("cell of the partition"))
        .collect();
    let mut edges = Vec::new();
    let mut base = 0;
    for n in finest {
        edges.extend(
            shape_edges(ShapeKind::Dumbbell, n.s, n.w, n.w, base)
                .into_iter()
                .map(|(a, b)| (ids[a], ids[b])),
        );
        base += n.cells.len();
    }
    let g = realize(&Digraph::labeled(pm.clone(), edges)?)?.f;
    let (h, fine_loops) = attach_loops_certified(&g, &pm)?;
    let by_u1: HashMap<Word, LoopPair> = fine_loops
        .into_iter()
        .map(|(c, lp)| (pm.cell(c.u[0]).first_word().expect("nonempty"), lp))
        .collect();
    let finest_loops: Vec<&LoopPair> = finest
        .iter()
        .map(|n| &by_u1[&n.cells[0].first_word().expect("nonempty")])
        .collect();

    // Coarse loops: orbit unions of the finest left loops reached through
    // type-1 children (left) or a type-2 child followed by type-1 children.
    let big_m = stages.len();
    let w_fine = finest[0].w;
    let mut witnesses = Vec::with_capacity(big_m);
    for (mi, nodes) in stages.iter().enumerate() {
        let wm = nodes[0].w;
        let descend = |mut idx: usize, first: usize| {
            for k in mi + 1..big_m {
                idx = 4 * idx + if k == mi + 1 { first } else { 0 };
            }
            idx
        };
        let orbit_union = |a: &Clopen| -> Result<Clopen> {
            let mut acc = a.clone();
            let mut x = a.clone();
            for _ in 1..w_fine / wm {
                x = iter_image(&h, &x, wm)?;
                acc = acc.union(&x);
            }
            Ok(acc)
        };
        let mut loops = Vec::with_capacity(nodes.len());
        for i in 0..nodes.len() {
            let lp = if mi + 1 == big_m {
                finest_loops[i].clone()
            } else {
                LoopPair {
                    a: orbit_union(&finest_loops[descend(i, 0)].a)?,
                    b: orbit_union(&finest_loops[descend(i, 1)].a)?,
                }
            };
            loops.push(lp);
        }
        let p = Partition::new(nodes.iter().flat_map(|n| n.cells.iter().cloned()).collect())?;
        // Store the loop pairs in classification order.
        let classes = classify_all(&build_gr(&h, &p)?)?;
        let loops = classes
            .iter()
            .map(|(_, c)| {
                let u1 = p.cell(c.u[0]);
                loops
                    .iter()
                    .find(|lp| lp.a.is_subset(u1))
                    .cloned()
                    .ok_or_else(|| Error::Contract("a dumbbell lost its left loop".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        witnesses.push(HomWitness { p, q: qs[mi], loops });
    }

    for (i, w) in witnesses.iter().enumerate() {
        if let Some(reason) = check_property_p(&h, w, i + 1).reason {
            return Err(Error::Contract(format!("stage {} witness: {reason}", i + 1)));
        }
    }
    let nest = hom_nesting(&witnesses);
    let divisible = match schedule {
        QSchedule::Strict => nest.multiple,
        QSchedule::Relaxed => nest.factorial_ratio,
    };
    if !nest.refines || !divisible {
        return Err(Error::Contract(format!("witness nesting: {}", nest.reason.unwrap_or_default())));
    }
    Ok(GenericHom { h, witnesses })
}

// ---------------------------------------------------------------------------
// Property (Q)
// ---------------------------------------------------------------------------

/// Whether the balloon `c` of `gr(f, P)` is strict: `f(v_i) ⊊ v_{i+1}`,
/// `f(w_j) ⊊ w_{j+1}` and `f(v_s) ∪ f(w_t) ⊊ w_1`.
fn strict_class(f: &PrefixMap, p: &Partition, c: &Classification) -> Result<bool> {
    // A loop is a balloon with an empty bar: every cell must map into a
    // proper subset of the next one.
    if matches!(c.shape, Shape::Loop(_)) {
        for (i, &x) in c.u.iter().enumerate() {
            let next = c.u[(i + 1) % c.u.len()];
            if !f.image(p.cell(x))?.is_proper_subset(p.cell(next)) {
                return Ok(false);
            }
        }
        return Ok(true);
    }
    if !matches!(c.shape, Shape::Balloon(..)) {
        return Err(Error::Shape(format!("component is {}, not a balloon", c.shape)));
    }
    let walk: Vec<usize> = c.v.iter().chain(&c.w).copied().collect();
    let s = c.v.len();
    let n = walk.len();
    let mut into_w1 = f.image(p.cell(c.v[s - 1]))?;
    for (i, &x) in walk.iter().enumerate() {
        let img = f.image(p.cell(x))?;
        let next = if i + 1 < n { walk[i + 1] } else { c.w[0] };
        if next == c.w[0] {
            if i + 1 == n {
                into_w1 = into_w1.union(&img);
            }
            continue;
        }
        if !img.is_proper_subset(p.cell(next)) {
            return Ok(false);
        }
    }
    Ok(into_w1.is_proper_subset(p.cell(c.w[0])))
}

/// Strictness of balloon (or loop) component `component` of `gr(f, P)` (in
/// [`classify_all`] order): the image of every cell is a proper subset of the
/// cell it maps into, the initial loop cell receiving the images of its two
/// predecessors together.
pub fn strict_check(f: &PrefixMap, p: &Partition, component: usize) -> Result<bool> {
    let classes = classify_all(&build_gr(f, p)?)?;
    let (_, c) = classes
        .get(component)
        .ok_or_else(|| Error::Precondition(format!("no component {component}")))?;
    strict_class(f, p, c)
}

fn property_q(f: &PrefixMap, w: &ContWitness, m: usize) -> std::result::Result<(), String> {
    if m == 0 {
        return Err("m must be positive".into());
    }
    let mesh = w.p.mesh();
    if mesh >= Rat::recip(m as u64) {
        return Err(format!("mesh {mesh} is not below 1/{m}"));
    }
    if w.q == 0 || !w.q.is_multiple_of(m) {
        return Err(format!("q = {} is not a multiple of {m}", w.q));
    }
    let k = plate(w.q).ok_or_else(|| format!("balloon size {}! is not enumerable", w.q))?;
    let classes = classify_all(&build_gr(f, &w.p).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    for (i, (_, c)) in classes.iter().enumerate() {
        if c.shape != Shape::Balloon(k, k) {
            return Err(format!("component {i} is {}, not Balloon({k},{k})", c.shape));
        }
        if !strict_class(f, &w.p, c).map_err(|e| e.to_string())? {
            return Err(format!("component {i} is not strict"));
        }
    }
    Ok(())
}

/// Checks a continuous-map witness for stage `m`: mesh `< 1/m`, `q` a
/// multiple of `m`, and every component a strict `Balloon(q!, q!)`.
pub fn check_property_q(f: &PrefixMap, w: &ContWitness, m: usize) -> Verdict {
    Verdict::from(property_q(f, w, m))
}

/// The common size `k` if every component of `gr(f, P)` is a strict
/// `Balloon(k, k)`; otherwise `None`.
pub fn f_admissible(f: &PrefixMap, p: &Partition) -> Result<Option<usize>> {
    let classes = classify_all(&build_gr(f, p)?)?;
    let mut size = None;
    for (_, c) in &classes {
        let k = match c.shape {
            Shape::Balloon(s, t) if s == t => s,
            _ => return Ok(None),
        };
        if size.is_some_and(|x| x != k) || !strict_class(f, p, c)? {
            return Ok(None);
        }
        size = Some(k);
    }
    Ok(size)
}

/// The vertex (cell index of `P_coarse`) of balloon `b_coarse` containing
/// the initial vertex of balloon `b_fine`; errors unless `b_fine` lies
/// inside `b_coarse`.
pub fn subballoon_type(
    f: &PrefixMap,
    p_fine: &Partition,
    p_coarse: &Partition,
    b_fine: usize,
    b_coarse: usize,
) -> Result<usize> {
    let fine = classify_all(&build_gr(f, p_fine)?)?;
    let coarse = classify_all(&build_gr(f, p_coarse)?)?;
    let (_, cf) = fine
        .get(b_fine)
        .ok_or_else(|| Error::Precondition(format!("no fine component {b_fine}")))?;
    let (_, cc) = coarse
        .get(b_coarse)
        .ok_or_else(|| Error::Precondition(format!("no coarse component {b_coarse}")))?;
    for c in [cf, cc] {
        if !matches!(c.shape, Shape::Balloon(..)) {
            return Err(Error::Shape(format!("component is {}, not a balloon", c.shape)));
        }
    }
    let vertices = cc.vertices();
    let loc = Locator::new(vertices.iter().map(|&v| (p_coarse.cell(v), v)));
    for x in cf.vertices() {
        if loc.locate(p_fine.cell(x)).is_none() {
            return Err(Error::NotRefinement(format!(
                "fine cell {} is not inside the coarse balloon",
                p_fine.cell(x)
            )));
        }
    }
    Ok(loc.locate(p_fine.cell(cf.v[0])).expect("checked"))
}

// ---------------------------------------------------------------------------
// The generic continuous map
// ---------------------------------------------------------------------------

/// Successor of local vertex `x` in a balloon `v_1..v_s, w_1..w_t`.
fn balloon_succ(x: usize, s: usize, t: usize) -> usize {
    if x + 1 < s + t {
        x + 1
    } else {
        s
    }
}

/// A random self-map of the length-2 cylinders whose transition digraph is
/// covered by balloons with `S ≤ 2` and `M | 2`.
fn random_cover_map<R: Rng>(rng: &mut R) -> Result<PrefixMap> {
    let q = Partition::uniform(2)?;
    loop {
        let sigma: Vec<usize> = (0..4).map(|_| rng.gen_range(0..4)).collect();
        let f = cylinder_map(&sigma);
        let cp = cover_params(&build_gr(&f, &q)?, ShapeKind::Balloon)?;
        if cp.s <= 2 && 2 % cp.m == 0 {
            return Ok(f);
        }
    }
}

/// Builds a continuous map with nested property-(Q) witnesses for
/// `m = 1, ..., m_max`.
///
/// Stage 1 approximates a random self-map of the length-2 cylinders by
/// balloons of type `(2, 2)`; each later stage places, inside every balloon,
/// one subballoon of type `(q_{m+1}!, q_{m+1}!)` starting at each vertex (two
/// at the initial vertex) and following the coarse edges, so every cell is
/// split and the mesh strictly decreases. On the finest stage every cell is collapsed
/// onto one cylinder inside its successor cell, which makes every balloon of
/// every stage strict.
pub fn generic_cont(m_max: usize, seed: u64, schedule: QSchedule) -> Result<GenericCont> {
    if m_max == 0 {
        return Err(Error::Precondition("m_max must be at least 1".into()));
    }
    let qs = schedule.values(m_max);
    let mut rng = sampling::rng(seed);
    let f0 = random_cover_map(&mut rng)?;
    let ov = Overrides {
        s: Some(2),
        m: Some(2),
        ..Overrides::default()
    };
    let approx = approximate(&f0, Rat::recip(2), ShapeKind::Balloon, ov)?;
    let classes = classify_all(&approx.lift.graph)?;

    // Budget: each balloon of stage m has 2·q_m! vertices, each the start of
    // one balloon of stage m + 1, and the initial vertex starts a second one.
    let mut nodes = classes.len() as u128;
    for (i, &q) in qs.iter().enumerate() {
        let needed = plate(q).and_then(|w| nodes.checked_mul(2 * w as u128));
        match needed {
            Some(c) if c <= CELL_BUDGET => nodes += c,
            other => {
                return Err(Error::Budget {
                    what: format!("generic_cont stage {}", i + 1),
                    needed: other.unwrap_or(u128::MAX),
                    budget: CELL_BUDGET,
                    feasible: i,
                })
            }
        }
    }

    // A stage is a list of balloons (v then w cells, equal lengths).
    let mut stages: Vec<Vec<Vec<Clopen>>> = vec![classes
        .iter()
        .map(|(_, c)| c.v.iter().chain(&c.w).map(|&x| approx.p.cell(x).clone()).collect())
        .collect()];
    for &q in &qs[1..] {
        let wn = plate(q).expect("budget checked");
        let parents = stages.last().expect("stage 1");
        let mut kids: Vec<(usize, Vec<usize>, Vec<Clopen>)> = Vec::new();
        for (pi, cells) in parents.iter().enumerate() {
            let half = cells.len() / 2;
            // The initial vertex is visited by no other subballoon; a second
            // subballoon starting there splits its cell as well.
            for start in std::iter::once(0).chain(0..cells.len()) {
                let mut pos = Vec::with_capacity(2 * wn);
                let mut x = start;
                for _ in 0..2 * wn {
                    pos.push(x);
                    x = balloon_succ(x, half, half);
                }
                if x != pos[wn] {
                    return Err(Error::Contract("subballoon walk does not close".into()));
                }
                kids.push((pi, pos, vec![Clopen::empty(); 2 * wn]));
            }
        }
        assign_cells(&mut rng, parents, &mut kids)?;
        stages.push(kids.into_iter().map(|(_, _, c)| c).collect());
    }

    // Collapse each finest cell onto one cylinder inside its successor.
    let mut rules = Vec::new();
    for cells in stages.last().expect("stage 1") {
        let half = cells.len() / 2;
        for (x, cell) in cells.iter().enumerate() {
            let next = &cells[balloon_succ(x, half, half)];
            let target = next.first_word().expect("nonempty").child(false)?;
            rules.extend(cell.cylinders().iter().map(|&w| Rule::new(w, target)));
        }
    }
    let f = PrefixMap::new(rules)?;
    let mut witnesses = Vec::with_capacity(stages.len());
    for (i, st) in stages.iter().enumerate() {
        let p = Partition::new(st.iter().flatten().cloned().collect())?;
        witnesses.push(ContWitness { p, q: qs[i] });
    }
    for (i, w) in witnesses.iter().enumerate() {
        if let Some(reason) = check_property_q(&f, w, i + 1).reason {
            return Err(Error::Contract(format!("stage {} witness: {reason}", i + 1)));
        }
    }
    let nest = cont_nesting(&witnesses);
    let divisible = match schedule {
        QSchedule::Strict => nest.multiple,
        QSchedule::Relaxed => nest.factorial_ratio,
    };
    if !nest.refines || !divisible {
        return Err(Error::Contract(format!("witness nesting: {}", nest.reason.unwrap_or_default())));
    }
    Ok(GenericCont { f, witnesses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::realize;

    #[test]
    fn schedules() {
        assert_eq!(QSchedule::Strict.values(4), vec![2, 4, 12, 48]);
        assert_eq!(QSchedule::Relaxed.values(4), vec![2, 4, 6, 12]);
        assert_eq!(factorial(5), Some(120));
        assert_eq!(factorial(40), None);
    }

    #[test]
    fn hom_stage_one() {
        let g = generic_hom(1, 7, QSchedule::Strict).unwrap();
        assert_eq!(g.witnesses.len(), 1);
        assert!(check_property_p(&g.h, &g.witnesses[0], 1).ok);
        assert_eq!(h_regular(&g.h, &g.witnesses[0].p).unwrap(), Some(2));
    }

    #[test]
    fn hom_two_stages() {
        let g = generic_hom(2, 3, QSchedule::Strict).unwrap();
        for (i, w) in g.witnesses.iter().enumerate() {
            assert!(check_property_p(&g.h, w, i + 1).ok);
        }
        assert!(hom_nesting(&g.witnesses).refines);
    }

    #[test]
    fn hom_strict_three_is_over_budget() {
        match generic_hom(3, 1, QSchedule::Strict).unwrap_err() {
            Error::Budget { feasible, .. } => assert_eq!(feasible, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn cont_two_stages() {
        let g = generic_cont(2, 5, QSchedule::Strict).unwrap();
        for (i, w) in g.witnesses.iter().enumerate() {
            assert!(check_property_q(&g.f, w, i + 1).ok);
        }
        assert_eq!(f_admissible(&g.f, &g.witnesses[0].p).unwrap(), Some(2));
    }

    #[test]
    fn attach_loops_rejects_non_dumbbells() {
        let p = Partition::uniform(2).unwrap();
        let d = Digraph::labeled(p.clone(), [(0, 0), (0, 1), (1, 2), (2, 2), (3, 3)]);
        // Vertex 3 is a separate loop: not a dumbbell.
        let g = realize(&d.unwrap()).unwrap();
        assert!(attach_loops(&g.f, &p).is_err());
    }
}

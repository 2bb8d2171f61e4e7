//! Dynamical certificates for maps carrying property-(P) or property-(Q)
//! witnesses: orbits and itineraries, the shadowing solver, Li-Yorke pair
//! exclusion, odometer covers of ω-limit sets, recurrence and periodic-point
//! reports, chain-continuity moduli and the non-equicontinuity defect.
//!
//! Every limit statement is replaced by a finite certificate with an explicit
//! horizon, and every certificate is re-checked exactly before it is
//! returned.

use crate::core::clopen::{mesh, Clopen};
use crate::core::partition::Partition;
use crate::core::point::{dist, Point};
use crate::core::prefix_map::{compose, PrefixMap};
use crate::core::rat::Rat;
use crate::core::word::Word;
use crate::digraph::{build_gr, classify_all, Classification, Digraph, Shape};
use crate::error::{Error, Result};
use crate::generic::{check_property_p, check_property_q, factorial, iter_image, ContWitness, HomWitness};
use crate::sampling;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Largest point representation (preperiod plus period) an orbit may reach.
pub const POINT_BUDGET: usize = 1 << 14;

// ---------------------------------------------------------------------------
// Orbits
// ---------------------------------------------------------------------------

/// The orbit `x, f(x), ..., f^n(x)`.
pub fn trajectory(f: &PrefixMap, x: &Point, n: usize) -> Result<Vec<Point>> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(x.clone());
    for i in 0..n {
        let y = f.apply(&out[i]);
        if y.size() > POINT_BUDGET {
            return Err(Error::PointBudget { reached: i, requested: n });
        }
        out.push(y);
    }
    Ok(out)
}

/// The `P`-itinerary of `x` under `f` for `n` steps (cell indices).
pub fn itinerary(f: &PrefixMap, x: &Point, n: usize, p: &Partition) -> Result<Vec<usize>> {
    Ok(trajectory(f, x, n)?.iter().map(|y| p.cell_of_point(y)).collect())
}

/// A random point `y` with `d(x, y) < delta` (`strict`) or `≤ delta`.
pub fn random_in_ball<R: Rng>(rng: &mut R, x: &Point, delta: Rat, strict: bool) -> Point {
    if delta.is_zero() {
        return x.clone();
    }
    // d(x, y) = 1/n with n the first differing position; keep enough bits.
    let inv = delta.denom() / delta.numer();
    let exact = delta.denom().is_multiple_of(delta.numer());
    let keep = if strict { inv as usize } else if exact { inv as usize - 1 } else { inv as usize };
    sampling::point(rng, 4, 4).prepend(&x.prefix_word(keep))
}

// ---------------------------------------------------------------------------
// Dumbbell bookkeeping
// ---------------------------------------------------------------------------

/// Position of a cell inside its dumbbell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    /// `u_{i+1}` of the left loop.
    U(usize),
    /// `v_{i+1}` of the bar.
    V(usize),
    /// `w_{i+1}` of the right loop.
    W(usize),
}

/// The classified components of `gr(h, P)` with a cell → (component, role)
/// lookup.
struct Layout {
    classes: Vec<Classification>,
    role: Vec<(usize, Role)>,
}

impl Layout {
    fn new(h: &PrefixMap, p: &Partition) -> Result<Layout> {
        let classes: Vec<Classification> = classify_all(&build_gr(h, p)?)?.into_iter().map(|(_, c)| c).collect();
        let mut role = vec![(usize::MAX, Role::U(0)); p.len()];
        for (k, c) in classes.iter().enumerate() {
            c.u.iter().enumerate().for_each(|(i, &x)| role[x] = (k, Role::U(i)));
            c.v.iter().enumerate().for_each(|(i, &x)| role[x] = (k, Role::V(i)));
            c.w.iter().enumerate().for_each(|(i, &x)| role[x] = (k, Role::W(i)));
        }
        Ok(Layout { classes, role })
    }
}

fn require_p(h: &PrefixMap, w: &HomWitness) -> Result<()> {
    match check_property_p(h, w, 1).reason {
        None => Ok(()),
        Some(r) => Err(Error::Witness(r)),
    }
}

fn require_q(f: &PrefixMap, w: &ContWitness) -> Result<()> {
    match check_property_q(f, w, 1).reason {
        None => Ok(()),
        Some(r) => Err(Error::Witness(r)),
    }
}

/// `h^{-n}(a)`.
fn iter_preimage(h: &PrefixMap, a: &Clopen, n: usize) -> Result<Clopen> {
    let mut x = a.clone();
    for _ in 0..n {
        x = h.preimage(&x)?;
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// Shadowing
// ---------------------------------------------------------------------------

/// A finite window `x_start, ..., x_{start+len-1}` of a δ-pseudotrajectory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoOrbit {
    /// Time index of the first point.
    pub start: i64,
    /// The points.
    pub points: Vec<Point>,
    /// The jump bound δ.
    pub delta: Rat,
}

impl PseudoOrbit {
    /// Checks `d(h(x_n), x_{n+1}) ≤ δ` for all consecutive pairs.
    pub fn check(&self, h: &PrefixMap) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::EmptyCollection("pseudo-orbit has no points".into()));
        }
        for (i, pair) in self.points.windows(2).enumerate() {
            let d = dist(&h.apply(&pair[0]), &pair[1]);
            if d > self.delta {
                return Err(Error::Invalid(format!(
                    "jump {d} > δ = {} at index {}",
                    self.delta,
                    self.start + i as i64
                )));
            }
        }
        Ok(())
    }

    /// A random δ-pseudo-orbit of `len` points starting at time 0: each point
    /// is a random point of the closed δ-ball around the image of the last.
    pub fn random<R: Rng>(rng: &mut R, h: &PrefixMap, x0: Point, len: usize, delta: Rat) -> PseudoOrbit {
        let mut points = vec![x0];
        while points.len() < len {
            let next = random_in_ball(rng, &h.apply(points.last().expect("nonempty")), delta, false);
            points.push(next);
        }
        PseudoOrbit { start: 0, points, delta }
    }
}

/// Which of the three itinerary patterns a pseudo-orbit follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShadowCase {
    /// The window visits the bar.
    BarCrossing,
    /// The window stays in the left loop.
    LeftLoop,
    /// The window stays in the right loop.
    RightLoop,
}

/// A shadowing point with its verification data.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shadow {
    /// The point `x` whose orbit shadows the window (`h^n(x)` at time `n`).
    pub point: Point,
    /// The pattern of the window.
    pub case: ShadowCase,
    /// Time at which the orbit was anchored in a chosen cell.
    pub anchor: i64,
    /// Number of nested clopen sets intersected (loop cases).
    pub depth: usize,
    /// `mesh(P)`; every shadowing distance is at most this.
    pub eps: Rat,
    /// Largest `d(x_n, h^n(x))` over the window.
    pub max_dist: Rat,
}

/// Finds a real orbit shadowing a δ-pseudo-orbit with `δ < min_gap(P)`.
///
/// The cell itinerary of the window is a walk in one dumbbell of
/// `gr(h, P)`. If it touches the bar, the orbit of any point of the matching
/// bar cell follows it; if it stays in the left loop, the point is taken from
/// `∩_{n≤N} h^{-nr}(u_1)`; if it stays in the right loop, from
/// `∩_{n≤N} h^{nt}(w_1 \ h(v_s))`, with `N` covering the window (or the
/// stage at which the sets stabilize). The result is verified cell by cell.
pub fn shadow(h: &PrefixMap, w: &HomWitness, po: &PseudoOrbit) -> Result<Shadow> {
    let gap = w.p.min_gap()?;
    if po.delta >= gap {
        return Err(Error::Precondition(format!("δ = {} is not below the minimum gap {gap}", po.delta)));
    }
    require_p(h, w)?;
    po.check(h)?;
    let lay = Layout::new(h, &w.p)?;
    let cells: Vec<usize> = po.points.iter().map(|x| w.p.cell_of_point(x)).collect();
    let comp = lay.role[cells[0]].0;
    let c = &lay.classes[comp];
    let g = build_gr(h, &w.p)?;
    for (i, pair) in cells.windows(2).enumerate() {
        if !g.has_edge(pair[0], pair[1]) {
            return Err(Error::Contract(format!("pseudo-orbit leaves the transition digraph at index {i}")));
        }
    }
    let roles: Vec<Role> = cells.iter().map(|&x| lay.role[x].1).collect();
    let (r, t) = (c.u.len(), c.w.len());
    let start = po.start;
    let end = start + po.points.len() as i64 - 1;
    let (case, anchor, y, depth) = if let Some(i) = roles.iter().position(|r| matches!(r, Role::V(_))) {
        let Role::V(j) = roles[i] else { unreachable!() };
        let y = w.p.cell(c.v[j]).least_point().expect("nonempty cell");
        (ShadowCase::BarCrossing, start + i as i64, y, 0)
    } else if roles.iter().all(|r| matches!(r, Role::U(_))) {
        let Role::U(i0) = roles[0] else { unreachable!() };
        let anchor = start - i0 as i64;
        let n = ((end - anchor) as usize).div_ceil(r) + 1;
        let u1 = w.p.cell(c.u[0]);
        let mut y_set = u1.clone();
        let mut depth = 0;
        while depth < n {
            let next = u1.intersect(&iter_preimage(h, &y_set, r)?);
            depth += 1;
            if next == y_set {
                break;
            }
            y_set = next;
        }
        let y = y_set
            .least_point()
            .ok_or_else(|| Error::Contract("nested left-loop intersection is empty".into()))?;
        (ShadowCase::LeftLoop, anchor, y, depth)
    } else if roles.iter().all(|r| matches!(r, Role::W(_))) {
        let Role::W(i_last) = roles[roles.len() - 1] else { unreachable!() };
        let anchor = end + ((t - i_last) % t) as i64;
        let n = ((anchor - start) as usize).div_ceil(t) + 1;
        let z0 = w.p.cell(c.w[0]).difference(&h.image(w.p.cell(*c.v.last().expect("bar")))?);
        let mut z_set = z0.clone();
        let mut depth = 0;
        while depth < n {
            let next = z0.intersect(&iter_image(h, &z_set, t)?);
            depth += 1;
            if next == z_set {
                break;
            }
            z_set = next;
        }
        let y = z_set
            .least_point()
            .ok_or_else(|| Error::Contract("nested right-loop intersection is empty".into()))?;
        (ShadowCase::RightLoop, anchor, y, depth)
    } else {
        return Err(Error::Contract("itinerary joins both loops without the bar".into()));
    };
    // The orbit of y (at time `anchor`) over the window and at time 0.
    let hinv = h.inverse()?;
    let at = |time: i64| -> Result<Point> {
        let steps = (time - anchor).unsigned_abs() as usize;
        let map = if time >= anchor { h } else { &hinv };
        Ok(trajectory(map, &y, steps)?.pop().expect("nonempty"))
    };
    let lo = start.min(anchor).min(0);
    let hi = end.max(anchor).max(0);
    let back = trajectory(&hinv, &y, (anchor - lo) as usize)?;
    let fwd = trajectory(h, &y, (hi - anchor) as usize)?;
    let orbit_at = |time: i64| -> &Point {
        if time >= anchor {
            &fwd[(time - anchor) as usize]
        } else {
            &back[(anchor - time) as usize]
        }
    };
    let eps = w.p.mesh();
    let mut max_dist = Rat::ZERO;
    for (i, x) in po.points.iter().enumerate() {
        let o = orbit_at(start + i as i64);
        if w.p.cell_of_point(o) != cells[i] {
            return Err(Error::Contract(format!("shadowing orbit leaves the itinerary at index {i}")));
        }
        max_dist = max_dist.max(dist(x, o));
    }
    if max_dist > eps {
        return Err(Error::Contract("shadowing distance exceeds the mesh".into()));
    }
    let point = if (lo..=hi).contains(&0) { orbit_at(0).clone() } else { at(0)? };
    Ok(Shadow {
        point,
        case,
        anchor,
        depth,
        eps,
        max_dist,
    })
}

// ---------------------------------------------------------------------------
// Li-Yorke pairs
// ---------------------------------------------------------------------------

/// A witness of either kind.
#[derive(Clone, Copy, Debug)]
pub enum WitnessRef<'a> {
    /// A property-(P) witness of a homeomorphism.
    Hom(&'a HomWitness),
    /// A property-(Q) witness of a continuous map.
    Cont(&'a ContWitness),
}

impl WitnessRef<'_> {
    fn partition(&self) -> &Partition {
        match self {
            WitnessRef::Hom(w) => &w.p,
            WitnessRef::Cont(w) => &w.p,
        }
    }

    fn require(&self, f: &PrefixMap) -> Result<()> {
        match self {
            WitnessRef::Hom(w) => require_p(f, w),
            WitnessRef::Cont(w) => require_q(f, w),
        }
    }
}

/// Outcome of [`li_yorke_exclusion`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "verdict")]
pub enum LiYorkeVerdict {
    /// From step `merge` on, both orbits share a cell at every tested step.
    SameCellTail {
        /// First step of the shared tail.
        merge: usize,
    },
    /// The orbits end in different cells and never merged after parting.
    Separated {
        /// Step at which they parted, if they started in one cell.
        split: Option<usize>,
    },
    /// The orbits merged into one cell and later parted again — the pattern
    /// of a Li-Yorke pair at this scale. Never produced for witnessed maps.
    Reseparated {
        /// Step of the merge.
        merge: usize,
        /// Step of the later split.
        split: usize,
    },
    /// The point budget was exhausted after `reached` steps.
    InconclusiveDepth {
        /// Steps computed.
        reached: usize,
    },
}

/// Compares the itineraries of `x` and `y` for `n` steps on a witness
/// partition. Cells of a dumbbell or balloon can split a pair only once, and
/// a pair that moves from different cells into one cell stays together, so
/// a merge followed by a split is impossible for witnessed maps.
pub fn li_yorke_exclusion(f: &PrefixMap, w: WitnessRef<'_>, x: &Point, y: &Point, n: usize) -> Result<LiYorkeVerdict> {
    w.require(f)?;
    let p = w.partition();
    let (ix, iy) = match (itinerary(f, x, n, p), itinerary(f, y, n, p)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(Error::PointBudget { reached, .. }), _) | (_, Err(Error::PointBudget { reached, .. })) => {
            return Ok(LiYorkeVerdict::InconclusiveDepth { reached })
        }
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    let same: Vec<bool> = ix.iter().zip(&iy).map(|(a, b)| a == b).collect();
    let mut merge = None;
    let mut split = None;
    for i in 1..same.len() {
        match (same[i - 1], same[i]) {
            (false, true) => merge = Some(i),
            (true, false) => {
                if let Some(m) = merge {
                    return Ok(LiYorkeVerdict::Reseparated { merge: m, split: i });
                }
                split = Some(i);
            }
            _ => {}
        }
    }
    Ok(if *same.last().expect("nonempty") {
        LiYorkeVerdict::SameCellTail { merge: merge.unwrap_or(0) }
    } else {
        LiYorkeVerdict::Separated { split }
    })
}

/// Upper bound on the number of walks enumerated per start vertex.
const WALK_LIMIT: usize = 1 << 16;

/// Whether, for every vertex of the component and every two walks of equal
/// length from it, the walks separate at most once: the times at which they
/// agree form an initial interval followed by a final interval (two walks
/// that split off at the left loop may meet again on the right loop, but
/// never split a second time). Walks of length `2·|V|` are enumerated
/// exhaustively.
pub fn walk_prefix_coincidence(g: &Digraph, c: &Classification) -> Result<bool> {
    if c.shape == Shape::Other {
        return Err(Error::Shape("component is neither a loop, a balloon nor a dumbbell".into()));
    }
    let verts = c.vertices();
    let len = 2 * verts.len();
    for &v in &verts {
        let mut walks: Vec<Vec<usize>> = vec![vec![v]];
        for _ in 0..len {
            let mut next = Vec::new();
            for wk in &walks {
                for &s in g.succ(*wk.last().expect("nonempty")) {
                    let mut e = wk.clone();
                    e.push(s);
                    next.push(e);
                }
            }
            if next.len() > WALK_LIMIT {
                return Err(Error::Precondition(format!("more than {WALK_LIMIT} walks from vertex {v}")));
            }
            walks = next;
        }
        for (i, a) in walks.iter().enumerate() {
            for b in &walks[i + 1..] {
                let splits = a.windows(2).zip(b.windows(2)).filter(|(x, y)| x[0] == y[0] && x[1] != y[1]).count();
                if splits > 1 {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Odometers
// ---------------------------------------------------------------------------

/// Stage data `α` of an odometer `Δ_α` (`m_i = α(1)···α(i)`); `pending`
/// marks a finite prefix of an infinite sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OdometerSpec {
    /// `α(1), α(2), ...`, each at least 2.
    pub alpha: Vec<u64>,
    /// Whether more stages follow.
    #[serde(default)]
    pub pending: bool,
}

impl OdometerSpec {
    /// A finite stage sequence.
    pub fn new(alpha: Vec<u64>) -> Result<OdometerSpec> {
        if let Some(a) = alpha.iter().find(|&&a| a < 2) {
            return Err(Error::Invalid(format!("odometer stage {a} is below 2")));
        }
        Ok(OdometerSpec { alpha, pending: false })
    }

    /// `m_i = α(1)···α(i)` (`None` on overflow).
    pub fn m(&self, i: usize) -> Option<u64> {
        self.alpha[..i].iter().try_fold(1u64, |acc, &a| acc.checked_mul(a))
    }
}

/// Adds one with carry in `Z_{α(1)} × Z_{α(2)} × ...` (the carry out of the
/// last coordinate is dropped).
pub fn odometer_step(spec: &OdometerSpec, x: &[u64]) -> Result<Vec<u64>> {
    if x.len() > spec.alpha.len() {
        return Err(Error::Invalid("more coordinates than stages".into()));
    }
    if let Some(i) = x.iter().zip(&spec.alpha).position(|(v, a)| v >= a) {
        return Err(Error::Invalid(format!("coordinate {i} is out of range")));
    }
    let mut out = x.to_vec();
    for (v, &a) in out.iter_mut().zip(&spec.alpha) {
        *v += 1;
        if *v < a {
            break;
        }
        *v = 0;
    }
    Ok(out)
}

/// `M_α(p)` for primes `p ≤ bound`: the count and whether it is only a
/// lower bound (more stages pending).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeProfile {
    /// Prime → (count, saturated).
    pub entries: BTreeMap<u64, (u32, bool)>,
}

fn primes_up_to(bound: u64) -> Vec<u64> {
    (2..=bound).filter(|&n| (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0)).collect()
}

/// The prime-multiplicity profile of `α` over the primes up to `prime_bound`.
pub fn m_profile(spec: &OdometerSpec, prime_bound: u64) -> PrimeProfile {
    let entries = primes_up_to(prime_bound)
        .into_iter()
        .map(|p| {
            let count = spec
                .alpha
                .iter()
                .map(|&a| {
                    let (mut a, mut k) = (a, 0);
                    while a % p == 0 {
                        a /= p;
                        k += 1;
                    }
                    k
                })
                .sum();
            (p, (count, spec.pending))
        })
        .collect();
    PrimeProfile { entries }
}

/// Finite-data comparison of two prime profiles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BsVerdict {
    /// All counts agree and are final.
    Equal,
    /// Some count provably differs.
    Different,
    /// The finite data cannot decide.
    Inconclusive,
}

/// Compares profiles prime by prime: final counts must agree; a lower bound
/// exceeding a final count is a difference; anything else involving a lower
/// bound is inconclusive.
pub fn bs_compare(a: &PrimeProfile, b: &PrimeProfile) -> BsVerdict {
    let mut verdict = BsVerdict::Equal;
    let primes: std::collections::BTreeSet<u64> = a.entries.keys().chain(b.entries.keys()).copied().collect();
    for p in primes {
        let (ca, sa) = a.entries.get(&p).copied().unwrap_or((0, false));
        let (cb, sb) = b.entries.get(&p).copied().unwrap_or((0, false));
        match (sa, sb) {
            (false, false) if ca != cb => return BsVerdict::Different,
            (false, false) => {}
            (true, false) if ca > cb => return BsVerdict::Different,
            (false, true) if cb > ca => return BsVerdict::Different,
            _ => verdict = BsVerdict::Inconclusive,
        }
    }
    verdict
}

// ---------------------------------------------------------------------------
// ω-limit covers
// ---------------------------------------------------------------------------

/// The cyclic cover of one stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCover {
    /// Stage (1-based).
    pub stage: usize,
    /// The cover sets in cyclic order (`h(c_j) = c_{j+1}`).
    pub cells: Vec<Clopen>,
    /// `α(stage)`: the size ratio to the previous stage.
    pub alpha: u64,
    /// Mesh of the cover.
    pub mesh: Rat,
}

/// Output of [`omega_covers`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmegaCovers {
    /// Steps after which the orbit lies in the loop region.
    pub settle: usize,
    /// The forward-invariant clopen loop region containing the orbit tail.
    pub loop_set: Clopen,
    /// One cover per stage, each refining the previous.
    pub covers: Vec<StageCover>,
    /// `α = (q_1!, q_2!/q_1!, ...)` (pending).
    pub alpha: OdometerSpec,
    /// `m! | q_{m+1}!/q_m!` for each stored `m`.
    pub universal: Vec<bool>,
    /// The three cover conditions (cyclic permutation, refinement, shrinking meshes).
    pub bk: [bool; 3],
}

/// `q_{m+1}! / q_m!` as a product (`None` on overflow).
fn factorial_ratio(q_lo: usize, q_hi: usize) -> Option<u64> {
    (q_lo + 1..=q_hi).try_fold(1u64, |acc, k| acc.checked_mul(k as u64))
}

/// Settles the orbit of `x` into a loop of the finest stored witness and
/// returns, for every stage, the cycle of cells covering that loop.
///
/// The orbit has settled once it enters the right-loop cells of a dumbbell
/// (forward invariant, since each maps into the next) or the orbit of a
/// left-loop clopen (invariant). The ω-limit set of `x` lies in that region
/// `L`. At each stage the cover pieces are the partition cells meeting `L`,
/// cut down to `L`. They are verified to form one cycle under `h`: each
/// piece maps into the next, with equality when `L` is invariant. They are
/// also verified to be nested across stages, to have sizes `q_1!, q_2!, ...`,
/// and to have strictly decreasing meshes.
pub fn omega_covers(h: &PrefixMap, witnesses: &[HomWitness], x: &Point, stages: usize) -> Result<OmegaCovers> {
    if stages == 0 {
        return Err(Error::Precondition("at least one stage is needed".into()));
    }
    if stages > witnesses.len() {
        return Err(Error::WitnessShortage {
            needed: stages - witnesses.len(),
        });
    }
    for (i, w) in witnesses[..stages].iter().enumerate() {
        if let Some(r) = check_property_p(h, w, i + 1).reason {
            return Err(Error::Witness(format!("stage {}: {r}", i + 1)));
        }
    }
    let fine = &witnesses[stages - 1];
    let lay = Layout::new(h, &fine.p)?;
    let weight = lay.classes[0].u.len();
    let limit = 64 * weight + fine.p.len();
    // Left-loop clopen orbits, built on demand per dumbbell.
    let mut left_orbits: BTreeMap<usize, Clopen> = BTreeMap::new();
    let mut y = x.clone();
    let mut found = None;
    for k in 0..=limit {
        let (comp, role) = lay.role[fine.p.cell_of_point(&y)];
        let c = &lay.classes[comp];
        match role {
            // Right-loop cells are forward invariant: once there, always there.
            Role::W(_) => {
                found = Some((k, Clopen::union_all(c.w.iter().map(|&i| fine.p.cell(i)))));
                break;
            }
            Role::U(_) => {
                if let std::collections::btree_map::Entry::Vacant(e) = left_orbits.entry(comp) {
                    let home = fine.p.cell(c.u[0]);
                    let lp = fine
                        .loops
                        .iter()
                        .find(|lp| lp.a.is_subset(home))
                        .ok_or_else(|| Error::Witness("loop missing".into()))?;
                    let mut orb = vec![lp.a.clone()];
                    for _ in 1..weight {
                        orb.push(h.image(orb.last().expect("nonempty"))?);
                    }
                    e.insert(Clopen::union_all(&orb));
                }
                if left_orbits[&comp].contains_point(&y) {
                    found = Some((k, left_orbits[&comp].clone()));
                    break;
                }
            }
            Role::V(_) => {}
        }
        y = h.apply(&y);
        if y.size() > POINT_BUDGET {
            return Err(Error::PointBudget { reached: k, requested: limit });
        }
    }
    let (settle, loop_set) = found.ok_or(Error::NotSettled {
        stage: stages,
        iterations: limit,
    })?;
    if !h.image(&loop_set)?.is_subset(&loop_set) {
        return Err(Error::Contract("loop set is not forward invariant".into()));
    }
    let mut covers: Vec<StageCover> = Vec::with_capacity(stages);
    let mut bk = [true; 3];
    for (i, w) in witnesses[..stages].iter().enumerate() {
        let piece = |c: usize| w.p.cell(c).intersect(&loop_set);
        let first_cell = w.p.cell_of_point(&y);
        let mut cells = vec![piece(first_cell)];
        loop {
            let img = h.image(cells.last().expect("nonempty"))?;
            let Some(next) = w.p.cell_containing(&img) else {
                bk[0] = false;
                break;
            };
            if next == first_cell {
                break;
            }
            if cells.len() > w.p.len() {
                bk[0] = false;
                break;
            }
            cells.push(piece(next));
        }
        if Clopen::union_all(&cells) != loop_set {
            bk[0] = false;
        }
        let q_prev = if i == 0 { 0 } else { witnesses[i - 1].q };
        let alpha = factorial_ratio(q_prev, w.q).ok_or_else(|| Error::Invalid("stage size overflows".into()))?;
        let expected = factorial(w.q).and_then(|v| usize::try_from(v).ok());
        if expected != Some(cells.len()) {
            bk[0] = false;
        }
        if let Some(prev) = covers.last() {
            if cells.len() as u64 != prev.cells.len() as u64 * alpha {
                bk[0] = false;
            }
            if !cells.iter().all(|c| prev.cells.iter().any(|d| c.is_subset(d))) {
                bk[1] = false;
            }
        }
        let m = mesh(&cells)?;
        if covers.last().is_some_and(|prev| m >= prev.mesh) {
            bk[2] = false;
        }
        covers.push(StageCover {
            stage: i + 1,
            cells,
            alpha,
            mesh: m,
        });
    }
    let universal = (1..stages)
        .map(|m| {
            let ratio = factorial_ratio(witnesses[m - 1].q, witnesses[m].q);
            let mf = factorial(m).and_then(|v| u64::try_from(v).ok());
            matches!((ratio, mf), (Some(r), Some(f)) if r % f == 0)
        })
        .collect();
    Ok(OmegaCovers {
        settle,
        loop_set,
        alpha: OdometerSpec {
            alpha: covers.iter().map(|c| c.alpha).collect(),
            pending: true,
        },
        covers,
        universal,
        bk,
    })
}

// ---------------------------------------------------------------------------
// Recurrence
// ---------------------------------------------------------------------------

/// A clopen set of nonrecurrent points with its certificate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonrecurrentSet {
    /// The set `h^k(b)` for a bar cell `b`.
    pub set: Clopen,
    /// The bar cell (partition index).
    pub bar_cell: usize,
    /// The exponent `k` (negative: preimages of `v_1`).
    pub offset: i64,
    /// The partition cell containing the set.
    pub cell: usize,
    /// Steps `n` for which `h^n(set) ∩ set = ∅` was verified (`r + s + t`).
    pub horizon: usize,
}

/// Nonrecurrence certificates of one dumbbell.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumbbellRecurrence {
    /// Component index in the classification order.
    pub component: usize,
    /// `h^{-r}(v_1), ..., h^{-1}(v_1), v_1, ..., v_s, h(v_s), ..., h^t(v_s)`.
    pub nonrecurrent: Vec<NonrecurrentSet>,
    /// Loop cells: the only region that may contain recurrent points.
    pub loop_cells: Vec<usize>,
}

/// Output of [`recurrence_report`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecurrenceReport {
    /// Per dumbbell.
    pub dumbbells: Vec<DumbbellRecurrence>,
    /// Periods searched for periodic points (`1..=bound`).
    pub periodic_bound: usize,
    /// A periodic point found, if any (period, point).
    pub periodic_point: Option<(usize, Point)>,
}

/// A point fixed by `f`, if any: a rule `s → d` has a fixed point iff one of
/// `s`, `d` is a prefix of the other.
pub fn fixed_point(f: &PrefixMap) -> Option<Point> {
    f.rules().iter().find_map(|r| {
        let (s, d) = (r.src, r.dst);
        if s == d {
            return Some(Point::least_in(&s));
        }
        let (short, long) = if s.len() < d.len() { (s, d) } else { (d, s) };
        if !short.is_prefix_of(&long) {
            return None;
        }
        let e = long.drop_prefix(short.len()).to_bits();
        Some(Point::new(short.to_bits(), e).expect("nonempty period"))
    })
}

/// The least period `n ≤ bound` of a periodic point of `h`, with the point.
pub fn periodic_point(h: &PrefixMap, bound: usize) -> Result<Option<(usize, Point)>> {
    let mut hn = h.clone();
    for n in 1..=bound {
        if let Some(p) = fixed_point(&hn) {
            return Ok(Some((n, p)));
        }
        if n < bound {
            hn = compose(&hn, h)?;
        }
    }
    Ok(None)
}

/// The nonrecurrent families of every dumbbell of a witness, with exact
/// wandering checks to the escape horizon `r + s + t`, plus a periodic-point
/// search up to period `4·q!`.
pub fn recurrence_report(h: &PrefixMap, w: &HomWitness) -> Result<RecurrenceReport> {
    require_p(h, w)?;
    let lay = Layout::new(h, &w.p)?;
    let g = build_gr(h, &w.p)?;
    let mut dumbbells = Vec::with_capacity(lay.classes.len());
    for (k, c) in lay.classes.iter().enumerate() {
        let (r, s, t) = (c.u.len(), c.v.len(), c.w.len());
        let horizon = r + s + t;
        // Graph-level escape: the bar runs into the right loop, which is absorbing.
        let in_w = |x: usize| c.w.contains(&x);
        if c.w.iter().any(|&x| !g.succ(x).iter().all(|&y| in_w(y))) {
            return Err(Error::Contract("right loop is not absorbing".into()));
        }
        let mut family = Vec::new();
        let v1 = w.p.cell(c.v[0]);
        for j in (1..=r).rev() {
            family.push((iter_preimage(h, v1, j)?, c.v[0], -(j as i64)));
        }
        for &b in &c.v {
            family.push((w.p.cell(b).clone(), b, 0));
        }
        let vs = w.p.cell(c.v[s - 1]);
        for j in 1..=t {
            family.push((iter_image(h, vs, j)?, c.v[s - 1], j as i64));
        }
        let mut nonrecurrent = Vec::with_capacity(family.len());
        for (set, bar_cell, offset) in family {
            let cell = w
                .p
                .cell_containing(&set)
                .ok_or_else(|| Error::Contract("family member spans several cells".into()))?;
            let mut img = set.clone();
            for n in 1..=horizon {
                img = h.image(&img)?;
                if img.meets(&set) {
                    return Err(Error::Contract(format!("family member returns after {n} steps")));
                }
            }
            nonrecurrent.push(NonrecurrentSet {
                set,
                bar_cell,
                offset,
                cell,
                horizon,
            });
        }
        dumbbells.push(DumbbellRecurrence {
            component: k,
            nonrecurrent,
            loop_cells: c.u.iter().chain(&c.w).copied().collect(),
        });
    }
    let weight = lay.classes[0].u.len();
    let periodic_bound = 4 * weight;
    Ok(RecurrenceReport {
        dumbbells,
        periodic_bound,
        periodic_point: periodic_point(h, periodic_bound)?,
    })
}

// ---------------------------------------------------------------------------
// Chain continuity
// ---------------------------------------------------------------------------

/// A witness sequence of either kind.
#[derive(Clone, Copy, Debug)]
pub enum WitnessSeq<'a> {
    /// Property-(P) witnesses of a homeomorphism.
    Hom(&'a [HomWitness]),
    /// Property-(Q) witnesses of a continuous map.
    Cont(&'a [ContWitness]),
}

/// Output of [`chain_modulus`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainModulus {
    /// The modulus δ.
    pub delta: Rat,
    /// The witness stage (1-based) it comes from.
    pub stage: usize,
    /// The target ε.
    pub eps: Rat,
    /// Number of sampled chains.
    pub samples: usize,
    /// Chains with some `d(x_n, f^n(x)) ≥ ε`.
    pub violations: usize,
    /// Largest sampled distance.
    pub max_dist: Rat,
}

/// Number of δ-chains sampled by [`chain_modulus`].
pub const CHAIN_SAMPLES: usize = 100;
/// Length of each sampled chain.
pub const CHAIN_LENGTH: usize = 50;

/// A δ for which every δ-chain from `B(x; δ)` stays within `eps` of the
/// orbit of `x`: the minimum gap of a witness partition with mesh `< eps`
/// in which `x` lies in a cell of out-degree one along its whole future
/// (any cell of a balloon; a bar or right-loop cell of a dumbbell). The
/// contract is spot-checked on sampled chains.
pub fn chain_modulus(f: &PrefixMap, ws: WitnessSeq<'_>, x: &Point, eps: Rat, seed: u64) -> Result<ChainModulus> {
    if eps.is_zero() {
        return Err(Error::Precondition("eps must be positive".into()));
    }
    let parts: Vec<&Partition> = match ws {
        WitnessSeq::Hom(s) => s.iter().map(|w| &w.p).collect(),
        WitnessSeq::Cont(s) => s.iter().map(|w| &w.p).collect(),
    };
    let first = parts
        .iter()
        .position(|p| p.mesh() < eps)
        .ok_or_else(|| Error::Precondition(format!("no witness partition has mesh below {eps}")))?;
    let stage = match ws {
        WitnessSeq::Cont(s) => {
            require_q(f, &s[first])?;
            first
        }
        WitnessSeq::Hom(s) => {
            let mut found = None;
            for (i, w) in s.iter().enumerate().skip(first) {
                require_p(f, w)?;
                let lay = Layout::new(f, &w.p)?;
                if !matches!(lay.role[w.p.cell_of_point(x)].1, Role::U(_)) {
                    found = Some(i);
                    break;
                }
            }
            found.ok_or_else(|| Error::NotCertified("the point lies in a left loop at every stored stage".into()))?
        }
    };
    let delta = parts[stage].min_gap()?;
    let mut rng = sampling::rng(seed);
    let orbit = trajectory(f, x, CHAIN_LENGTH)?;
    let mut violations = 0;
    let mut max_dist = Rat::ZERO;
    for _ in 0..CHAIN_SAMPLES {
        let mut y = random_in_ball(&mut rng, x, delta, true);
        let mut bad = false;
        for (n, o) in orbit.iter().enumerate() {
            if n > 0 {
                y = random_in_ball(&mut rng, &f.apply(&y), delta, true);
            }
            let d = dist(&y, o);
            max_dist = max_dist.max(d);
            bad |= d >= eps;
        }
        violations += bad as usize;
    }
    Ok(ChainModulus {
        delta,
        stage: stage + 1,
        eps,
        samples: CHAIN_SAMPLES,
        violations,
        max_dist,
    })
}

// ---------------------------------------------------------------------------
// Non-equicontinuity defect
// ---------------------------------------------------------------------------

/// Finite-stage evidence that `h` is not equicontinuous near the left loop
/// of a dumbbell.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectCertificate {
    /// Truncation stage `N`.
    pub n: usize,
    /// `Y_N = ∩_{k≤N} h^{-kr}(u_1)`.
    pub y_set: Clopen,
    /// A point of `Y_N` (stays in the left loop for `N·r` steps).
    pub y: Point,
    /// A nearby point whose orbit leaves the loop within `N·r` steps
    /// (absent for `N = 0`).
    pub companion: Option<Point>,
    /// `d(y, y')`.
    pub distance: Option<Rat>,
    /// Diameter of the smallest `Y_k` containing both points.
    pub scale: Option<Rat>,
    /// Step at which the companion has left the loop.
    pub exit: Option<usize>,
    /// `min_gap(P)`: the separation reached at the exit.
    pub separation: Rat,
}

/// Builds `Y_N` for the left loop of component `component` of `gr(h, P)`,
/// a point `y ∈ Y_N`, and the closest companion `y' ∈ u_1 \ Y_N`, whose
/// orbit leaves the loop while that of `y` stays.
pub fn equicontinuity_defect(h: &PrefixMap, w: &HomWitness, component: usize, n: usize) -> Result<DefectCertificate> {
    require_p(h, w)?;
    let lay = Layout::new(h, &w.p)?;
    let c = lay
        .classes
        .get(component)
        .ok_or_else(|| Error::Invalid(format!("no component {component}")))?;
    let r = c.u.len();
    let horizon = n * r;
    if horizon > POINT_BUDGET {
        return Err(Error::PointBudget {
            reached: 0,
            requested: horizon,
        });
    }
    let u1 = w.p.cell(c.u[0]);
    let mut chain = vec![u1.clone()];
    for _ in 0..n {
        let next = u1.intersect(&iter_preimage(h, chain.last().expect("nonempty"), r)?);
        chain.push(next);
    }
    let y_set = chain.last().expect("nonempty").clone();
    let y = y_set
        .least_point()
        .ok_or_else(|| Error::Contract("nested loop intersection is empty".into()))?;
    let separation = w.p.min_gap()?;
    let loop_cells: Vec<usize> = c.u.clone();
    let in_loop = |p: &Point| loop_cells.contains(&w.p.cell_of_point(p));
    let orbit_y = trajectory(h, &y, horizon)?;
    if !orbit_y.iter().all(in_loop) {
        return Err(Error::Contract("point of Y_N leaves the loop".into()));
    }
    if n == 0 {
        return Ok(DefectCertificate {
            n,
            y_set,
            y,
            companion: None,
            distance: None,
            scale: None,
            exit: None,
            separation,
        });
    }
    let rest = u1.difference(&y_set);
    let key = y.prefix_word(crate::core::word::depth_cap());
    let best: &Word = rest
        .cylinders()
        .iter()
        .max_by_key(|c| c.lcp(&key))
        .ok_or_else(|| Error::Contract("Y_N fills u_1; no companion exists".into()))?;
    let companion = Point::least_in(best);
    let distance = dist(&y, &companion);
    let k = chain.iter().rposition(|s| s.contains_point(&companion)).expect("u_1 contains it");
    let scale = chain[k].diam()?;
    let orbit_c = trajectory(h, &companion, horizon)?;
    let exit = orbit_c
        .iter()
        .position(|p| !in_loop(p))
        .ok_or_else(|| Error::Contract("companion stays in the loop".into()))?;
    if dist(&orbit_c[exit], &orbit_y[exit]) < separation || distance > scale {
        return Err(Error::Contract("defect pair does not separate".into()));
    }
    Ok(DefectCertificate {
        n,
        y_set,
        y,
        companion: Some(companion),
        distance: Some(distance),
        scale: Some(scale),
        exit: Some(exit),
        separation,
    })
}

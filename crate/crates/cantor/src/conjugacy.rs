//! Conjugacy schedules, their commuting conditions, stage homeomorphisms and
//! the back-and-forth constructions between generic maps.
//!
//! A [`ConjugacySchedule`] stores decreasing partitions `P_n` (for `f`) and
//! `Q_n` (for `g`) with vertex maps `ν_n`. In [`Mode::Iso`] every `ν_n` is an
//! isomorphism `gr(f, P_n) → gr(g, Q_n)`; in [`Mode::Alternating`] `ν_n` is a
//! surjective graph map `gr(f, P_n) → gr(g, Q_n)` for odd `n` and
//! `gr(g, Q_n) → gr(f, P_n)` for even `n`.
//!
//! The three equivalent forms of "commutes with refinements" are evaluated
//! independently: [`condition_i`] checks the refinement squares,
//! [`condition_ii`] the inclusions `ν_m(a) ⊆ ν_n(a)` (equalities in iso mode)
//! by index arithmetic, and [`condition_iii`] the set equalities between the
//! accumulated images and `ν_n(a)`.

use crate::core::clopen::{mesh, Clopen};
use crate::core::partition::Partition;
use crate::core::prefix_map::{clopen_bijection, compose, sup_dist, PrefixMap};
use crate::core::rat::Rat;
use crate::digraph::{build_gr, check_graph_map, classify_all, Digraph, GraphMap, Shape};
use crate::error::{Error, Result};
use crate::generic::{normalize_subdumbbell, ContWitness, DumbbellCells, HomWitness, Locator};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Which way a stage map points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// `ν_n : gr(f, P_n) → gr(g, Q_n)`.
    FToG,
    /// `ν_n : gr(g, Q_n) → gr(f, P_n)`.
    GToF,
}

impl Direction {
    fn flip(self) -> Direction {
        match self {
            Direction::FToG => Direction::GToF,
            Direction::GToF => Direction::FToG,
        }
    }
}

/// Whether the schedule consists of isomorphisms or alternating surjections.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Every `ν_n` is an isomorphism from the `f` side to the `g` side.
    Iso,
    /// `ν_n` points from `f` to `g` for odd `n` and back for even `n`.
    Alternating,
}

/// One stage `(P_n, Q_n, ν_n)`. `nu[i]` is the image of the `i`-th cell of
/// the source partition (`P_n` for [`Direction::FToG`], else `Q_n`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    /// Partition on the `f` side.
    pub p: Partition,
    /// Partition on the `g` side.
    pub q: Partition,
    /// The vertex map.
    pub nu: Vec<usize>,
    /// Its direction.
    pub direction: Direction,
}

impl Stage {
    /// The partition `ν_n` maps from.
    pub fn source(&self) -> &Partition {
        match self.direction {
            Direction::FToG => &self.p,
            Direction::GToF => &self.q,
        }
    }

    /// The partition `ν_n` maps to.
    pub fn target(&self) -> &Partition {
        match self.direction {
            Direction::FToG => &self.q,
            Direction::GToF => &self.p,
        }
    }

    /// The partition of the given side (`true` for the `f` side).
    fn side(&self, f_side: bool) -> &Partition {
        if f_side {
            &self.p
        } else {
            &self.q
        }
    }

    /// `ν_n` as a graph map between the transition digraphs of `f` and `g`.
    pub fn graph_map(&self, f: &PrefixMap, g: &PrefixMap) -> Result<GraphMap> {
        let (a, b) = match self.direction {
            Direction::FToG => (build_gr(f, &self.p)?, build_gr(g, &self.q)?),
            Direction::GToF => (build_gr(g, &self.q)?, build_gr(f, &self.p)?),
        };
        GraphMap::new(a, b, self.nu.clone())
    }
}

/// A sequence of stages.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjugacySchedule {
    /// Stages `1, ..., N`.
    pub stages: Vec<Stage>,
    /// Iso or alternating.
    pub mode: Mode,
}

/// The first failure of a commuting condition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Coarse stage (1-based).
    pub n: usize,
    /// Fine stage (1-based).
    pub m: usize,
    /// Cell index at stage `n` (source side of `ν_n`).
    pub cell: usize,
    /// What failed.
    pub detail: String,
}

/// Outcome of a commuting check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommuteReport {
    /// Whether the condition holds.
    pub ok: bool,
    /// The first violation found.
    pub violation: Option<Violation>,
}

impl CommuteReport {
    fn from(r: std::result::Result<(), Violation>) -> CommuteReport {
        match r {
            Ok(()) => CommuteReport { ok: true, violation: None },
            Err(v) => CommuteReport {
                ok: false,
                violation: Some(v),
            },
        }
    }
}

fn violation(n: usize, m: usize, cell: usize, detail: impl Into<String>) -> Violation {
    Violation {
        n: n + 1,
        m: m + 1,
        cell,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------------------
// Structural validation and refinement maps
// ---------------------------------------------------------------------------

/// Refinement maps between consecutive partitions of both sides.
struct Refinements {
    /// `fp[k]`: `P_{k+1} → P_k` (0-based stages).
    fp: Vec<Vec<usize>>,
    /// `gq[k]`: `Q_{k+1} → Q_k`.
    gq: Vec<Vec<usize>>,
}

impl Refinements {
    fn new(s: &ConjugacySchedule) -> std::result::Result<Refinements, Violation> {
        let mut fp = Vec::new();
        let mut gq = Vec::new();
        for k in 0..s.stages.len().saturating_sub(1) {
            let (a, b) = (&s.stages[k], &s.stages[k + 1]);
            fp.push(
                b.p.refinement_map(&a.p)
                    .map_err(|_| violation(k, k + 1, 0, "P is not decreasing"))?,
            );
            gq.push(
                b.q.refinement_map(&a.q)
                    .map_err(|_| violation(k, k + 1, 0, "Q is not decreasing"))?,
            );
        }
        Ok(Refinements { fp, gq })
    }

    /// Map from cells of stage `m` to cells of stage `n ≤ m` on one side.
    fn between(&self, f_side: bool, m: usize, n: usize, len: usize) -> Vec<usize> {
        let maps = if f_side { &self.fp } else { &self.gq };
        let mut out: Vec<usize> = (0..len).collect();
        for k in (n..m).rev() {
            for x in out.iter_mut() {
                *x = maps[k][*x];
            }
        }
        out
    }
}

fn check_shape(s: &ConjugacySchedule) -> std::result::Result<(), Violation> {
    for (n, st) in s.stages.iter().enumerate() {
        let expected = match s.mode {
            Mode::Iso => Direction::FToG,
            Mode::Alternating if n % 2 == 0 => Direction::FToG,
            Mode::Alternating => Direction::GToF,
        };
        if st.direction != expected {
            return Err(violation(n, n, 0, "stage direction does not match the mode"));
        }
        if st.nu.len() != st.source().len() || st.nu.iter().any(|&x| x >= st.target().len()) {
            return Err(violation(n, n, 0, "vertex map is not total"));
        }
        let mut hit = vec![false; st.target().len()];
        st.nu.iter().for_each(|&x| hit[x] = true);
        if let Some(c) = hit.iter().position(|h| !h) {
            return Err(violation(n, n, c, "vertex map is not surjective"));
        }
        if s.mode == Mode::Iso && st.nu.len() != st.target().len() {
            return Err(violation(n, n, 0, "iso stage is not a bijection"));
        }
    }
    Ok(())
}

/// Checks that every `ν_n` is a surjective graph map between the transition
/// digraphs (isomorphisms in iso mode) and that both partition sequences
/// decrease with strictly decreasing meshes.
pub fn validate(s: &ConjugacySchedule, f: &PrefixMap, g: &PrefixMap) -> Result<()> {
    let bad = |v: Violation| Error::Invalid(format!("stage {}: {}", v.n, v.detail));
    check_shape(s).map_err(bad)?;
    Refinements::new(s).map_err(bad)?;
    for (n, st) in s.stages.iter().enumerate() {
        let phi = st.graph_map(f, g)?;
        if let Err(e) = check_graph_map(&phi) {
            return Err(Error::Invalid(format!("stage {}: ν breaks edge {e:?}", n + 1)));
        }
        if s.mode == Mode::Iso && !phi.is_edge_surjective() {
            return Err(Error::Invalid(format!("stage {}: ν is not an isomorphism", n + 1)));
        }
    }
    for pair in s.stages.windows(2) {
        if pair[1].p.mesh() >= pair[0].p.mesh() || pair[1].q.mesh() >= pair[0].q.mesh() {
            return Err(Error::Invalid("stage meshes do not decrease strictly".into()));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// The three commuting conditions
// ---------------------------------------------------------------------------

/// For stage `n` and a later stage `m`, the cells of the target side of
/// `ν_n` at stage `m` that make up `ν_m(a)` (same direction) or
/// `ν_m^{-1}(a)` (opposite direction), grouped by `a`.
fn members(s: &ConjugacySchedule, r: &Refinements, n: usize, m: usize) -> Vec<Vec<usize>> {
    let (sn, sm) = (&s.stages[n], &s.stages[m]);
    let src_is_f = sn.direction == Direction::FToG;
    let mut out = vec![Vec::new(); sn.source().len()];
    if sm.direction == sn.direction {
        let up = r.between(src_is_f, m, n, sm.source().len());
        for (b, &a) in up.iter().enumerate() {
            out[a].push(sm.nu[b]);
        }
    } else {
        let up = r.between(src_is_f, m, n, sm.target().len());
        for (c, &img) in sm.nu.iter().enumerate() {
            out[up[img]].push(c);
        }
    }
    out
}

/// Condition (i): every refinement square commutes.
pub fn condition_i(s: &ConjugacySchedule) -> CommuteReport {
    CommuteReport::from((|| {
        check_shape(s)?;
        let r = Refinements::new(s)?;
        for n in 0..s.stages.len().saturating_sub(1) {
            let (a, b) = (&s.stages[n], &s.stages[n + 1]);
            let src_is_f = a.direction == Direction::FToG;
            let up_src = r.between(src_is_f, n + 1, n, b.side(src_is_f).len());
            let up_tgt = r.between(!src_is_f, n + 1, n, b.side(!src_is_f).len());
            if a.direction == b.direction {
                // j_n ∘ ν_{n+1} = ν_n ∘ i_n.
                for (x, &y) in b.nu.iter().enumerate() {
                    if up_tgt[y] != a.nu[up_src[x]] {
                        return Err(violation(n, n + 1, up_src[x], format!("square fails at fine cell {x}")));
                    }
                }
            } else {
                // The coarse map of the target side equals ν_n ∘ (coarse) ∘ ν_{n+1}.
                for (c, &y) in b.nu.iter().enumerate() {
                    if up_tgt[c] != a.nu[up_src[y]] {
                        return Err(violation(n, n + 1, up_src[y], format!("square fails at fine cell {c}")));
                    }
                }
            }
        }
        Ok(())
    })())
}

/// Condition (ii): `ν_m(a) ⊆ ν_n(a)` and `ν_m^{-1}(a) ⊆ ν_n(a)` for all
/// later stages `m` (equalities `ν_m(a) = ν_n(a)` in iso mode), by index
/// arithmetic on refinement maps.
pub fn condition_ii(s: &ConjugacySchedule) -> CommuteReport {
    CommuteReport::from((|| {
        check_shape(s)?;
        let r = Refinements::new(s)?;
        for n in 0..s.stages.len() {
            let sn = &s.stages[n];
            let tgt_is_f = sn.direction == Direction::GToF;
            for m in n + 1..s.stages.len() {
                let mem = members(s, &r, n, m);
                let tgt_len = s.stages[m].side(tgt_is_f).len();
                let up = r.between(tgt_is_f, m, n, tgt_len);
                let mut owner = vec![usize::MAX; tgt_len];
                for (a, cells) in mem.iter().enumerate() {
                    for &c in cells {
                        if up[c] != sn.nu[a] {
                            return Err(violation(n, m, a, format!("image cell {c} escapes ν_n(a)")));
                        }
                        owner[c] = a;
                    }
                }
                if s.mode == Mode::Iso {
                    for (c, &parent) in up.iter().enumerate() {
                        let a = sn.nu.iter().position(|&x| x == parent).expect("surjective");
                        if owner[c] != a {
                            return Err(violation(n, m, a, format!("cell {c} of ν_n(a) is not covered")));
                        }
                    }
                }
            }
        }
        Ok(())
    })())
}

/// Accumulated images per stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureStage {
    /// `ν_n(a)` for each source cell `a`.
    pub images: Vec<Clopen>,
    /// `ν̃_n(a)` (iso) or `ν̄_n(a)` (alternating) for each source cell.
    pub closures: Vec<Clopen>,
    /// Mesh of the images.
    pub image_mesh: Rat,
    /// Mesh of the closures.
    pub closure_mesh: Rat,
}

/// The accumulated images `ν̃_n` / `ν̄_n` of every stored stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NuClosure {
    /// One entry per stage.
    pub stages: Vec<ClosureStage>,
}

/// Computes the accumulated images of every stage as clopen sets.
pub fn nu_closure(s: &ConjugacySchedule) -> Result<NuClosure> {
    let bad = |v: Violation| Error::Invalid(format!("stage {}: {}", v.n, v.detail));
    check_shape(s).map_err(bad)?;
    let r = Refinements::new(s).map_err(bad)?;
    let mut out = Vec::with_capacity(s.stages.len());
    for n in 0..s.stages.len() {
        let sn = &s.stages[n];
        let tgt_is_f = sn.direction == Direction::GToF;
        let images: Vec<Clopen> = sn.nu.iter().map(|&c| sn.target().cell(c).clone()).collect();
        let mut parts: Vec<Vec<Clopen>> = images.iter().map(|c| vec![c.clone()]).collect();
        for m in n + 1..s.stages.len() {
            let tp = s.stages[m].side(tgt_is_f);
            for (a, cells) in members(s, &r, n, m).into_iter().enumerate() {
                parts[a].extend(cells.into_iter().map(|c| tp.cell(c).clone()));
            }
        }
        let closures: Vec<Clopen> = parts.iter().map(Clopen::union_all).collect();
        out.push(ClosureStage {
            image_mesh: mesh(&images)?,
            closure_mesh: mesh(&closures)?,
            images,
            closures,
        });
    }
    Ok(NuClosure { stages: out })
}

/// Condition (iii): the accumulated images equal `ν_n(a)` as sets.
pub fn condition_iii(s: &ConjugacySchedule) -> CommuteReport {
    CommuteReport::from((|| {
        check_shape(s)?;
        Refinements::new(s)?;
        let nc = nu_closure(s).map_err(|e| violation(0, 0, 0, e.to_string()))?;
        for (n, st) in nc.stages.iter().enumerate() {
            for (a, (img, cl)) in st.images.iter().zip(&st.closures).enumerate() {
                if img != cl {
                    return Err(violation(n, n, a, "accumulated image exceeds ν_n(a)"));
                }
            }
        }
        Ok(())
    })())
}

/// Whether the schedule commutes with refinements (condition (ii)); on
/// failure reports the first violating `(n, m, cell)`.
pub fn commutes_check(s: &ConjugacySchedule) -> CommuteReport {
    condition_ii(s)
}

/// Finite-stage surrogate of asymptotic commuting: the mesh of the
/// accumulated images of stage `n` is at most `bounds[n]` for every stored
/// stage (missing bounds are not checked).
pub fn asym_commutes_check(s: &ConjugacySchedule, bounds: &[Rat]) -> Result<bool> {
    let nc = nu_closure(s)?;
    Ok(nc.stages.iter().zip(bounds).all(|(st, b)| st.closure_mesh <= *b))
}

/// The schedule of inverses `ν_n^{-1}` of an iso schedule (roles of `f` and
/// `g` exchanged).
pub fn inverse_schedule(s: &ConjugacySchedule) -> Result<ConjugacySchedule> {
    if s.mode != Mode::Iso {
        return Err(Error::Precondition("only iso schedules can be inverted".into()));
    }
    let stages = s
        .stages
        .iter()
        .map(|st| {
            let mut inv = vec![usize::MAX; st.nu.len()];
            for (a, &c) in st.nu.iter().enumerate() {
                if c >= inv.len() || inv[c] != usize::MAX {
                    return Err(Error::Precondition("stage map is not a bijection".into()));
                }
                inv[c] = a;
            }
            Ok(Stage {
                p: st.q.clone(),
                q: st.p.clone(),
                nu: inv,
                direction: Direction::FToG,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ConjugacySchedule { stages, mode: Mode::Iso })
}

// ---------------------------------------------------------------------------
// Stage homeomorphisms and the conjugator
// ---------------------------------------------------------------------------

/// A homeomorphism mapping each source cell into its `ν`-image so that the
/// images of the cells over a target cell `c` partition `c` (onto `ν(a)`
/// when `ν` is a bijection). The preimages of `c`, in cell order, receive
/// the pieces of `c.split(k)` in order.
pub fn stage_hom(nu: &GraphMap) -> Result<PrefixMap> {
    let (src, tgt) = match (nu.source.labels(), nu.target.labels()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Precondition("stage maps need partition-labeled digraphs".into())),
    };
    stage_hom_cells(src, tgt, &nu.map)
}

fn stage_hom_cells(src: &Partition, tgt: &Partition, map: &[usize]) -> Result<PrefixMap> {
    let mut pre: Vec<Vec<usize>> = vec![Vec::new(); tgt.len()];
    for (a, &c) in map.iter().enumerate() {
        pre[c].push(a);
    }
    let mut rules = Vec::new();
    for (c, list) in pre.iter().enumerate() {
        if list.is_empty() {
            return Err(Error::Precondition(format!("stage map misses target cell {c}")));
        }
        let pieces = if list.len() == 1 {
            vec![tgt.cell(c).clone()]
        } else {
            tgt.cell(c).split(list.len())?
        };
        for (&a, piece) in list.iter().zip(&pieces) {
            rules.extend(clopen_bijection(src.cell(a), piece)?);
        }
    }
    PrefixMap::new(rules)
}

/// Residual of one stage map.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageReport {
    /// Stage (1-based).
    pub stage: usize,
    /// Direction of `ν_n`.
    pub direction: Direction,
    /// Whether the map was inverted to point from the `f` side to the `g` side.
    pub inverted: bool,
    /// `sup d(h_n f, g h_n)` (or, for a non-invertible `g → f` stage, `sup d(t_n g, f t_n)`).
    pub residual: Rat,
    /// `mesh(Q_n) + mesh(g(Q_n))` (respectively `mesh(P_n) + mesh(f(P_n))`).
    pub bound: Rat,
    /// `mesh(P_n)`.
    pub mesh_p: Rat,
    /// `mesh(Q_n)`.
    pub mesh_q: Rat,
    /// Mesh of the accumulated images of stage `n`.
    pub closure_mesh: Rat,
}

/// Cauchy evidence between two stage maps of the same direction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CauchyBound {
    /// Earlier stage (1-based).
    pub n: usize,
    /// Later stage (1-based).
    pub m: usize,
    /// `sup d(h_m, h_n)`.
    pub dist: Rat,
    /// Closure mesh of stage `n`.
    pub bound: Rat,
}

/// Output of [`conjugator`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Conjugator {
    /// The deepest stage map pointing from the `f` side to the `g` side.
    pub h: PrefixMap,
    /// Per-stage residuals.
    pub stages: Vec<StageReport>,
    /// Cauchy bounds for every pair of stages of equal direction.
    pub cauchy: Vec<CauchyBound>,
}

/// Builds the stage homeomorphisms of a commuting schedule, their residuals
/// against the conjugacy equation and the Cauchy bounds between them; the
/// deepest `f → g` map is returned as the finite-stage conjugator.
pub fn conjugator(s: &ConjugacySchedule, f: &PrefixMap, g: &PrefixMap) -> Result<Conjugator> {
    let rep = commutes_check(s);
    if let Some(v) = rep.violation {
        return Err(Error::Precondition(format!(
            "schedule does not commute with refinements (stage {} vs {}, cell {}: {})",
            v.n, v.m, v.cell, v.detail
        )));
    }
    let closure = nu_closure(s)?;
    let mut maps = Vec::with_capacity(s.stages.len());
    let mut reports = Vec::with_capacity(s.stages.len());
    let mut best: Option<PrefixMap> = None;
    for (n, st) in s.stages.iter().enumerate() {
        let t = stage_hom_cells(st.source(), st.target(), &st.nu)?;
        let bijective = st.nu.len() == st.target().len();
        let iso = bijective && st.graph_map(f, g)?.is_edge_surjective();
        let (forward, inverted) = match st.direction {
            Direction::FToG => (Some(t.clone()), false),
            Direction::GToF if iso => (Some(t.inverse()?), true),
            Direction::GToF => (None, false),
        };
        let (residual, bound) = match &forward {
            Some(h) => (
                sup_dist(&compose(f, h)?, &compose(h, g)?),
                st.q.mesh() + mesh(&g.image_family(&st.q)?)?,
            ),
            None => (
                sup_dist(&compose(g, &t)?, &compose(&t, f)?),
                st.p.mesh() + mesh(&f.image_family(&st.p)?)?,
            ),
        };
        if let Some(h) = forward {
            best = Some(h);
        }
        reports.push(StageReport {
            stage: n + 1,
            direction: st.direction,
            inverted,
            residual,
            bound,
            mesh_p: st.p.mesh(),
            mesh_q: st.q.mesh(),
            closure_mesh: closure.stages[n].closure_mesh,
        });
        maps.push(t);
    }
    let mut cauchy = Vec::new();
    for n in 0..maps.len() {
        for m in n + 1..maps.len() {
            if s.stages[m].direction == s.stages[n].direction {
                cauchy.push(CauchyBound {
                    n: n + 1,
                    m: m + 1,
                    dist: sup_dist(&maps[m], &maps[n]),
                    bound: closure.stages[n].closure_mesh,
                });
            }
        }
    }
    let h = best.ok_or_else(|| Error::Precondition("no stage maps from f to g".into()))?;
    Ok(Conjugator {
        h,
        stages: reports,
        cauchy,
    })
}

// ---------------------------------------------------------------------------
// Fixtures
// ---------------------------------------------------------------------------

/// The iso schedule induced by a homeomorphism `h` (conjugating `f` to
/// `h f h⁻¹`): `P_n` uniform of depth `depths[n]`, `Q_n = h(P_n)` and
/// `ν_n(a) = h(a)`.
pub fn iso_fixture(h: &PrefixMap, depths: &[usize]) -> Result<ConjugacySchedule> {
    if !h.is_homeomorphism() {
        return Err(Error::Precondition("fixtures need a homeomorphism".into()));
    }
    let mut stages = Vec::with_capacity(depths.len());
    for &d in depths {
        let p = Partition::uniform(d)?;
        let images = h.image_family(&p)?;
        let q = Partition::new(images.clone())?;
        let nu = images
            .iter()
            .map(|c| q.cell_containing(c).expect("image cell"))
            .collect();
        stages.push(Stage {
            p,
            q,
            nu,
            direction: Direction::FToG,
        });
    }
    Ok(ConjugacySchedule { stages, mode: Mode::Iso })
}

/// The alternating schedule of [`iso_fixture`]: even stages are inverted.
pub fn alternating_fixture(h: &PrefixMap, depths: &[usize]) -> Result<ConjugacySchedule> {
    let iso = iso_fixture(h, depths)?;
    let stages = iso
        .stages
        .into_iter()
        .enumerate()
        .map(|(n, st)| {
            if n % 2 == 0 {
                st
            } else {
                let mut inv = vec![0; st.nu.len()];
                for (a, &c) in st.nu.iter().enumerate() {
                    inv[c] = a;
                }
                Stage {
                    nu: inv,
                    direction: Direction::GToF,
                    ..st
                }
            }
        })
        .collect();
    Ok(ConjugacySchedule {
        stages,
        mode: Mode::Alternating,
    })
}

/// Swaps the images of two cells of a random later stage so that the
/// refinement square into the previous stage breaks. Needs a commuting
/// schedule with at least two stages.
pub fn mutate<R: Rng>(s: &ConjugacySchedule, rng: &mut R) -> Result<ConjugacySchedule> {
    let n_st = s.stages.len();
    if n_st < 2 {
        return Err(Error::Precondition("mutation needs two stages".into()));
    }
    let r = Refinements::new(s).map_err(|v| Error::Invalid(v.detail))?;
    let start = rng.gen_range(1..n_st);
    for k in (start..n_st).chain(1..start) {
        let (a, b) = (&s.stages[k - 1], &s.stages[k]);
        let src_is_f = a.direction == Direction::FToG;
        // The coarse cell each fine image is checked against.
        let key: Vec<usize> = if a.direction == b.direction {
            let up = r.between(!src_is_f, k, k - 1, b.target().len());
            b.nu.iter().map(|&y| up[y]).collect()
        } else {
            let up = r.between(src_is_f, k, k - 1, b.target().len());
            b.nu.iter().map(|&y| a.nu[up[y]]).collect()
        };
        let x = rng.gen_range(0..key.len());
        if let Some(y) = (0..key.len()).map(|i| (x + i) % key.len()).find(|&y| key[y] != key[x]) {
            let mut out = s.clone();
            out.stages[k].nu.swap(x, y);
            return Ok(out);
        }
    }
    Err(Error::Precondition("no stage admits a breaking swap".into()))
}

// ---------------------------------------------------------------------------
// Back and forth between generic homeomorphisms
// ---------------------------------------------------------------------------

/// Smallest cylinder word of a list of cells (the round-robin sort key).
fn key(cells: &[Clopen]) -> crate::core::word::Word {
    cells
        .iter()
        .filter_map(Clopen::first_word)
        .min()
        .expect("nonempty cells")
}

/// Round-robin surjection: the `k`-th source maps to target `k mod |targets|`.
fn round_robin(sources: usize, targets: usize, kind: &str) -> Result<Vec<usize>> {
    if sources < targets || (targets == 0 && sources > 0) {
        return Err(Error::Cardinality {
            kind: kind.into(),
            detail: format!("{sources} source(s) for {targets} target(s)"),
        });
    }
    Ok((0..sources).map(|k| k % targets).collect())
}

/// Stage maps of positionally matched shapes: the `i`-th cell (walk order)
/// of each source shape maps to the `i`-th cell of its matched target.
fn positional(
    src: &[Vec<Clopen>],
    tgt: &[Vec<Clopen>],
    phi: &[usize],
    p_src: &Partition,
    p_tgt: &Partition,
) -> Result<Vec<usize>> {
    let mut nu = vec![usize::MAX; p_src.len()];
    for (i, cells) in src.iter().enumerate() {
        let other = &tgt[phi[i]];
        if other.len() != cells.len() {
            return Err(Error::Contract("matched shapes differ in size".into()));
        }
        for (a, b) in cells.iter().zip(other) {
            let ia = p_src.cell_containing(a).ok_or_else(|| Error::Contract("cell not in partition".into()))?;
            let ib = p_tgt.cell_containing(b).ok_or_else(|| Error::Contract("cell not in partition".into()))?;
            nu[ia] = ib;
        }
    }
    if nu.contains(&usize::MAX) {
        return Err(Error::Contract("stage map is not total".into()));
    }
    Ok(nu)
}

fn walk_cells(d: &DumbbellCells) -> Vec<Clopen> {
    d.positions().map(|(_, c)| c.clone()).collect()
}

/// Dumbbells of `gr(h, P)` sorted by smallest cylinder word.
fn dumbbells(h: &PrefixMap, p: &Partition) -> Result<Vec<DumbbellCells>> {
    let mut out = classify_all(&build_gr(h, p)?)?
        .into_iter()
        .map(|(_, c)| DumbbellCells::from_class(p, &c))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by_key(|d| key(&walk_cells(d)));
    Ok(out)
}

fn check_depth(nf: usize, ng: usize, stages: usize) -> Result<()> {
    if stages == 0 {
        return Err(Error::Precondition("at least one stage is needed".into()));
    }
    let have = nf.min(ng);
    if stages > have {
        return Err(Error::WitnessShortage { needed: stages - have });
    }
    Ok(())
}

/// Bar increases bringing `d` to bar length `target` in steps of `step`
/// (left first; type-3 subdumbbells grow equally on both sides).
fn grow_bar(h: &PrefixMap, d: &DumbbellCells, target: usize, step: usize, both: bool) -> Result<DumbbellCells> {
    let diff = target - d.v.len();
    let unit = if both { 2 * step } else { step };
    if !diff.is_multiple_of(unit) {
        return Err(Error::Contract(format!(
            "bar lengths {} and {target} cannot be aligned in steps of {unit}",
            d.v.len()
        )));
    }
    let mut d = d.clone();
    for _ in 0..diff / unit {
        for _ in 0..step {
            d = d.increase_left(h)?;
        }
        if both {
            for _ in 0..step {
                d = d.increase_right(h)?;
            }
        }
    }
    Ok(d)
}

/// One side of the back-and-forth state: the map and its current dumbbells.
struct Side<'a> {
    h: &'a PrefixMap,
    shapes: Vec<DumbbellCells>,
}

fn side_partition(shapes: &[DumbbellCells]) -> Result<Partition> {
    Partition::new(shapes.iter().flat_map(walk_cells).collect())
}

/// Builds an alternating schedule between two maps carrying property-(P)
/// witnesses.
///
/// Stage 1 matches the dumbbells of `gr(f, P_1)` onto those of `gr(g, Q_1)`
/// by a round-robin surjection and lengthens bars on the left until each
/// group agrees. Each later stage reverses direction: the subdumbbells of the
/// new source side are normalized relative to their parents, matched per
/// type onto the subdumbbells of the parents' preimages, aligned (in steps of
/// the coarse plate weight) and mapped positionally.
pub fn back_and_forth_hom(
    f: &PrefixMap,
    wf: &[HomWitness],
    g: &PrefixMap,
    wg: &[HomWitness],
    stages: usize,
) -> Result<ConjugacySchedule> {
    check_depth(wf.len(), wg.len(), stages)?;
    for n in 0..stages {
        if wf[n].q != wg[n].q {
            return Err(Error::Precondition(format!(
                "stage {} plate parameters differ ({} vs {})",
                n + 1,
                wf[n].q,
                wg[n].q
            )));
        }
    }
    let mut sides = [
        Side {
            h: f,
            shapes: dumbbells(f, &wf[0].p)?,
        },
        Side {
            h: g,
            shapes: dumbbells(g, &wg[0].p)?,
        },
    ];
    // Stage 1: f → g.
    let mut phi = round_robin(sides[0].shapes.len(), sides[1].shapes.len(), "component")?;
    for t in 0..sides[1].shapes.len() {
        let group: Vec<usize> = (0..phi.len()).filter(|&i| phi[i] == t).collect();
        let bar = group
            .iter()
            .map(|&i| sides[0].shapes[i].v.len())
            .chain([sides[1].shapes[t].v.len()])
            .max()
            .expect("nonempty");
        for &i in &group {
            sides[0].shapes[i] = grow_bar(f, &sides[0].shapes[i], bar, 1, false)?;
        }
        sides[1].shapes[t] = grow_bar(g, &sides[1].shapes[t], bar, 1, false)?;
    }
    let mut out = Vec::with_capacity(stages);
    let mut src = 0usize;
    let mut direction = Direction::FToG;
    out.push(emit(&sides, src, direction, &phi)?);

    for n in 1..stages {
        let tgt = src;
        src = 1 - src;
        direction = direction.flip();
        let plate = sides[0].shapes[0].u.len();
        // Children of each current shape, normalized.
        let mut kids: [Vec<(usize, u8, DumbbellCells)>; 2] = [vec![], vec![]];
        for (k, w) in [(0usize, &wf[n]), (1, &wg[n])] {
            let side = &sides[k];
            let parents: Vec<Vec<Clopen>> = side.shapes.iter().map(walk_cells).collect();
            let loc = Locator::new(parents.iter().enumerate().flat_map(|(i, cs)| cs.iter().map(move |c| (c, i))));
            for d in dumbbells(side.h, &w.p)? {
                let i = loc
                    .locate(&d.u[0])
                    .ok_or_else(|| Error::NotRefinement("witness does not refine the previous stage".into()))?;
                let nm = normalize_subdumbbell(side.h, &d, &side.shapes[i])?;
                kids[k].push((i, nm.kind, nm.db));
            }
        }
        // φ_{n}: source parent → target parent (stage n - 1 map, reversed roles).
        let mut next_src: Vec<DumbbellCells> = Vec::new();
        let mut next_tgt: Vec<DumbbellCells> = kids[tgt].iter().map(|(_, _, d)| d.clone()).collect();
        let mut next_phi: Vec<usize> = Vec::new();
        for parent in 0..sides[src].shapes.len() {
            let pre: Vec<usize> = (0..phi.len()).filter(|&i| phi[i] == parent).collect();
            for kind in 1..=3u8 {
                let mut a: Vec<usize> = (0..kids[src].len())
                    .filter(|&i| kids[src][i].0 == parent && kids[src][i].1 == kind)
                    .collect();
                let mut b: Vec<usize> = (0..kids[tgt].len())
                    .filter(|&i| pre.contains(&kids[tgt][i].0) && kids[tgt][i].1 == kind)
                    .collect();
                a.sort_by_key(|&i| key(&walk_cells(&kids[src][i].2)));
                b.sort_by_key(|&i| key(&walk_cells(&kids[tgt][i].2)));
                let rr = round_robin(a.len(), b.len(), &format!("type {kind}"))?;
                for (k, &ai) in a.iter().enumerate() {
                    next_src.push(kids[src][ai].2.clone());
                    next_phi.push(b[rr[k]]);
                }
                // Align every group on a common bar length.
                for &bi in &b {
                    let members: Vec<usize> = (0..a.len()).filter(|&k| b[rr[k]] == bi).collect();
                    let start = next_src.len() - a.len();
                    let bar = members
                        .iter()
                        .map(|&k| next_src[start + k].v.len())
                        .chain([next_tgt[bi].v.len()])
                        .max()
                        .expect("nonempty");
                    for &k in &members {
                        next_src[start + k] = grow_bar(sides[src].h, &next_src[start + k], bar, plate, kind == 3)?;
                    }
                    next_tgt[bi] = grow_bar(sides[tgt].h, &next_tgt[bi], bar, plate, kind == 3)?;
                }
            }
        }
        if next_src.len() != kids[src].len() {
            return Err(Error::Contract("a subdumbbell was not matched".into()));
        }
        sides[src].shapes = next_src;
        sides[tgt].shapes = next_tgt;
        phi = next_phi;
        out.push(emit(&sides, src, direction, &phi)?);
    }
    let s = ConjugacySchedule {
        stages: out,
        mode: Mode::Alternating,
    };
    finish(s, f, g)
}

fn emit(sides: &[Side; 2], src: usize, direction: Direction, phi: &[usize]) -> Result<Stage> {
    let p = side_partition(&sides[0].shapes)?;
    let q = side_partition(&sides[1].shapes)?;
    let cells = |k: usize| sides[k].shapes.iter().map(walk_cells).collect::<Vec<_>>();
    let (ps, pt) = if src == 0 { (&p, &q) } else { (&q, &p) };
    let nu = positional(&cells(src), &cells(1 - src), phi, ps, pt)?;
    Ok(Stage { p, q, nu, direction })
}

/// Final exact verification of a constructed schedule.
fn finish(s: ConjugacySchedule, f: &PrefixMap, g: &PrefixMap) -> Result<ConjugacySchedule> {
    validate(&s, f, g).map_err(|e| Error::Contract(format!("constructed schedule: {e}")))?;
    if let Some(v) = commutes_check(&s).violation {
        return Err(Error::Contract(format!(
            "constructed schedule does not commute (stage {} vs {}: {})",
            v.n, v.m, v.detail
        )));
    }
    Ok(s)
}

// ---------------------------------------------------------------------------
// Back and forth between generic continuous maps
// ---------------------------------------------------------------------------

/// Balloons of `gr(f, P)` as cell lists in walk order, sorted by smallest
/// cylinder word.
fn balloons(f: &PrefixMap, p: &Partition) -> Result<Vec<Vec<Clopen>>> {
    let mut out = Vec::new();
    for (_, c) in classify_all(&build_gr(f, p)?)? {
        if !matches!(c.shape, Shape::Balloon(..)) {
            return Err(Error::Shape(format!("component is {}, not a balloon", c.shape)));
        }
        out.push(c.v.iter().chain(&c.w).map(|&x| p.cell(x).clone()).collect::<Vec<_>>());
    }
    out.sort_by_key(|b| key(b));
    Ok(out)
}

/// Builds an alternating schedule between two maps carrying property-(Q)
/// witnesses.
///
/// Stage 1 matches balloons by a round-robin surjection. Each later stage
/// reverses direction; a subballoon has type `u` when its initial vertex
/// lies in vertex `u` of its parent, and the subballoons of type `u` of a
/// parent are mapped onto the subballoons of the matching vertex of the
/// parents' preimages, initial vertex to initial vertex and then along the
/// edges.
pub fn back_and_forth_cont(
    f: &PrefixMap,
    wf: &[ContWitness],
    g: &PrefixMap,
    wg: &[ContWitness],
    stages: usize,
) -> Result<ConjugacySchedule> {
    check_depth(wf.len(), wg.len(), stages)?;
    for n in 0..stages {
        if wf[n].q != wg[n].q {
            return Err(Error::Precondition(format!("stage {} balloon parameters differ", n + 1)));
        }
    }
    let maps = [f, g];
    let mut shapes = [balloons(f, &wf[0].p)?, balloons(g, &wg[0].p)?];
    let shape_of = |b: &Vec<Clopen>| b.len();
    if shapes.iter().flatten().any(|b| shape_of(b) != shape_of(&shapes[0][0])) {
        return Err(Error::Precondition("stage-1 balloons differ in type".into()));
    }
    let mut phi = round_robin(shapes[0].len(), shapes[1].len(), "component")?;
    let emit_c = |shapes: &[Vec<Vec<Clopen>>; 2], src: usize, dir: Direction, phi: &[usize]| -> Result<Stage> {
        let p = Partition::new(shapes[0].iter().flatten().cloned().collect())?;
        let q = Partition::new(shapes[1].iter().flatten().cloned().collect())?;
        let (ps, pt) = if src == 0 { (&p, &q) } else { (&q, &p) };
        let nu = positional(&shapes[src], &shapes[1 - src], phi, ps, pt)?;
        Ok(Stage {
            p,
            q,
            nu,
            direction: dir,
        })
    };
    let mut src = 0usize;
    let mut direction = Direction::FToG;
    let mut out = vec![emit_c(&shapes, src, direction, &phi)?];
    for n in 1..stages {
        let tgt = src;
        src = 1 - src;
        direction = direction.flip();
        // Children with (parent, type = local vertex of the initial cell).
        let mut kids: [Vec<(usize, usize, Vec<Clopen>)>; 2] = [vec![], vec![]];
        for (k, w) in [(0usize, &wf[n]), (1, &wg[n])] {
            let loc = Locator::new(
                shapes[k]
                    .iter()
                    .enumerate()
                    .flat_map(|(i, cs)| cs.iter().enumerate().map(move |(x, c)| (c, (i, x)))),
            );
            for b in balloons(maps[k], &w.p)? {
                let (i, x) = loc
                    .locate(&b[0])
                    .ok_or_else(|| Error::NotRefinement("witness does not refine the previous stage".into()))?;
                if b.iter().any(|c| loc.locate(c).map(|(j, _)| j) != Some(i)) {
                    return Err(Error::NotRefinement("subballoon leaves its parent".into()));
                }
                kids[k].push((i, x, b));
            }
        }
        let mut next_src = Vec::new();
        let mut next_phi = Vec::new();
        let next_tgt: Vec<Vec<Clopen>> = kids[tgt].iter().map(|(_, _, b)| b.clone()).collect();
        for (parent, shape) in shapes[src].iter().enumerate() {
            let pre: Vec<usize> = (0..phi.len()).filter(|&i| phi[i] == parent).collect();
            for u in 0..shape.len() {
                let mut a: Vec<usize> = (0..kids[src].len())
                    .filter(|&i| kids[src][i].0 == parent && kids[src][i].1 == u)
                    .collect();
                let mut b: Vec<usize> = (0..kids[tgt].len())
                    .filter(|&i| pre.contains(&kids[tgt][i].0) && kids[tgt][i].1 == u)
                    .collect();
                a.sort_by_key(|&i| key(&kids[src][i].2));
                b.sort_by_key(|&i| key(&kids[tgt][i].2));
                let rr = round_robin(a.len(), b.len(), &format!("vertex {u}"))?;
                for (k, &ai) in a.iter().enumerate() {
                    if kids[src][ai].2.len() != next_tgt[b[rr[k]]].len() {
                        return Err(Error::Precondition("subballoons differ in type".into()));
                    }
                    next_src.push(kids[src][ai].2.clone());
                    next_phi.push(b[rr[k]]);
                }
            }
        }
        if next_src.len() != kids[src].len() {
            return Err(Error::Contract("a subballoon was not matched".into()));
        }
        shapes[src] = next_src;
        shapes[tgt] = next_tgt;
        phi = next_phi;
        out.push(emit_c(&shapes, src, direction, &phi)?);
    }
    let s = ConjugacySchedule {
        stages: out,
        mode: Mode::Alternating,
    };
    finish(s, f, g)
}

/// The transition digraph of `h` on `P` with its partition labels, for
/// callers assembling graph maps by hand.
pub fn labeled_gr(h: &PrefixMap, p: &Partition) -> Result<Digraph> {
    build_gr(h, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generic::{generic_cont, generic_hom, QSchedule};
    use crate::sampling;

    #[test]
    fn fixtures_commute_and_mutants_fail() {
        let mut rng = sampling::rng(1);
        let h = sampling::homeomorphism(&mut rng, 4);
        for s in [
            iso_fixture(&h, &[1, 2, 3]).unwrap(),
            alternating_fixture(&h, &[1, 2, 3]).unwrap(),
        ] {
            assert!(condition_i(&s).ok && condition_ii(&s).ok && condition_iii(&s).ok);
            let bad = mutate(&s, &mut rng).unwrap();
            assert!(!condition_i(&bad).ok && !condition_ii(&bad).ok && !condition_iii(&bad).ok);
        }
    }

    #[test]
    fn identity_schedule_gives_identity() {
        let f = PrefixMap::shift();
        let s = iso_fixture(&PrefixMap::identity(), &[1, 2]).unwrap();
        let c = conjugator(&s, &f, &f).unwrap();
        assert_eq!(c.h, PrefixMap::identity());
        assert!(c.stages.iter().all(|r| r.residual.is_zero()));
    }

    #[test]
    fn hom_back_and_forth_two_stages() {
        let a = generic_hom(2, 1, QSchedule::Strict).unwrap();
        let b = generic_hom(2, 2, QSchedule::Strict).unwrap();
        let s = back_and_forth_hom(&a.h, &a.witnesses, &b.h, &b.witnesses, 2).unwrap();
        assert!(commutes_check(&s).ok);
        let c = conjugator(&s, &a.h, &b.h).unwrap();
        for r in &c.stages {
            assert!(r.residual <= r.bound, "{r:?}");
        }
    }

    #[test]
    fn cont_back_and_forth_two_stages() {
        let a = generic_cont(2, 1, QSchedule::Strict).unwrap();
        let b = generic_cont(2, 2, QSchedule::Strict).unwrap();
        let s = back_and_forth_cont(&a.f, &a.witnesses, &b.f, &b.witnesses, 2).unwrap();
        assert!(commutes_check(&s).ok);
    }
}

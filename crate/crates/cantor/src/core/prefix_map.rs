//! Prefix-substitution maps of the Cantor space.
//!
//! A [`PrefixMap`] is a finite rule system `src → dst` whose sources form a
//! complete antichain; it acts by `f(src·w) = dst·w`. Rule systems are kept
//! canonical: sorted by source and with sibling rules `p0 → q0`, `p1 → q1`
//! merged into `p → q`. The canonical system is the set of maximal cylinders
//! on which the map is a prefix substitution, so equal maps have equal rules.

use crate::core::clopen::{meet, meet_by, Clopen, Meet};
use crate::core::partition::Partition;
use crate::core::point::Point;
use crate::core::rat::Rat;
use crate::core::word::Word;
use crate::error::{Error, Result};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

/// One substitution rule `src → dst`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct Rule {
    /// Source cylinder word.
    pub src: Word,
    /// Replacement prefix.
    pub dst: Word,
}

impl Rule {
    /// Builds a rule.
    pub fn new(src: Word, dst: Word) -> Rule {
        Rule { src, dst }
    }

    /// The image of the subcylinder `[t] ⊆ [src]`.
    pub fn rewrite(&self, t: &Word) -> Result<Word> {
        debug_assert!(self.src.is_prefix_of(t));
        self.dst.concat(&t.drop_prefix(self.src.len()))
    }

    /// The rule restricted to the subcylinder `[t] ⊆ [src]`.
    pub fn restrict(&self, t: &Word) -> Result<Rule> {
        Ok(Rule::new(*t, self.rewrite(t)?))
    }
}

/// Merges sibling rules of a source-sorted antichain (stack pass).
fn merge_rules(sorted: Vec<Rule>) -> Vec<Rule> {
    let mut out: Vec<Rule> = Vec::with_capacity(sorted.len());
    for r in sorted {
        let mut cur = r;
        while let Some(top) = out.last() {
            let mergeable = cur.src.last_bit() == Some(true)
                && Some(top.src) == cur.src.sibling()
                && cur.dst.last_bit() == Some(true)
                && Some(top.dst) == cur.dst.sibling();
            if !mergeable {
                break;
            }
            out.pop();
            cur = Rule::new(cur.src.parent().expect("nonempty"), cur.dst.parent().expect("nonempty"));
        }
        out.push(cur);
    }
    out
}

/// Checks that sorted words form an antichain.
fn is_sorted_antichain(words: &[Word]) -> bool {
    words.windows(2).all(|p| p[0] < p[1] && !p[0].is_prefix_of(&p[1]))
}

/// A continuous self-map of `2^ℕ` given by prefix substitution rules.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PrefixMap {
    rules: Vec<Rule>,
}

impl PrefixMap {
    /// Validates (complete antichain of sources) and canonicalizes rules.
    pub fn new(mut rules: Vec<Rule>) -> Result<PrefixMap> {
        rules.sort_unstable();
        let srcs: Vec<Word> = rules.iter().map(|r| r.src).collect();
        if !is_sorted_antichain(&srcs) {
            return Err(Error::Invalid("rule sources overlap".into()));
        }
        if !Clopen::from_sorted_antichain(srcs).is_full() {
            return Err(Error::Invalid("rule sources do not cover the space".into()));
        }
        Ok(PrefixMap {
            rules: merge_rules(rules),
        })
    }

    /// Glues partial rule systems with disjoint domains covering the space.
    pub fn glue<I: IntoIterator<Item = Vec<Rule>>>(parts: I) -> Result<PrefixMap> {
        PrefixMap::new(parts.into_iter().flatten().collect())
    }

    /// Builds a map from string literals; panics on malformed input.
    pub fn lit(rules: &[(&str, &str)]) -> PrefixMap {
        PrefixMap::new(
            rules
                .iter()
                .map(|(s, d)| Rule::new(s.parse().expect("word"), d.parse().expect("word")))
                .collect(),
        )
        .expect("valid rule literal")
    }

    /// The identity `{ε → ε}`.
    pub fn identity() -> PrefixMap {
        PrefixMap {
            rules: vec![Rule::new(Word::EMPTY, Word::EMPTY)],
        }
    }

    /// Flips the first bit: `{0 → 1, 1 → 0}`.
    pub fn swap() -> PrefixMap {
        PrefixMap::lit(&[("0", "1"), ("1", "0")])
    }

    /// The one-sided shift `{0 → ε, 1 → ε}`.
    pub fn shift() -> PrefixMap {
        PrefixMap::lit(&[("0", ""), ("1", "")])
    }

    /// Canonical rules, sorted by source.
    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Longest rule source.
    pub fn depth(&self) -> usize {
        self.rules.iter().map(|r| r.src.len()).max().unwrap_or(0)
    }

    fn sorted_dsts(&self) -> Vec<Word> {
        let mut d: Vec<Word> = self.rules.iter().map(|r| r.dst).collect();
        d.sort_unstable();
        d
    }

    /// Whether the map is injective (destinations form an antichain).
    pub fn is_injective(&self) -> bool {
        is_sorted_antichain(&self.sorted_dsts())
    }

    /// Whether the map is a homeomorphism (destinations form a complete
    /// antichain).
    pub fn is_homeomorphism(&self) -> bool {
        let d = self.sorted_dsts();
        is_sorted_antichain(&d) && Clopen::from_sorted_antichain(d).is_full()
    }

    /// `f(2^ℕ)`.
    pub fn range(&self) -> Clopen {
        Clopen::from_words(self.rules.iter().map(|r| r.dst).collect())
    }

    /// The rule whose source is a prefix of the point.
    pub fn rule_for(&self, x: &Point) -> &Rule {
        match meet_by(&self.rules, |r| r.src, &x.key()) {
            Meet::Inside(i) => &self.rules[i],
            Meet::Extensions(_) => unreachable!("sources cover the space"),
        }
    }

    /// `f(x)`.
    pub fn apply(&self, x: &Point) -> Point {
        let r = self.rule_for(x);
        x.drop(r.src.len()).prepend(&r.dst)
    }

    /// The rules of `f` restricted to the clopen set `a` (a partial system
    /// whose sources partition `a`).
    pub fn restrict(&self, a: &Clopen) -> Result<Vec<Rule>> {
        let mut out = Vec::new();
        for c in a.cylinders() {
            match meet_by(&self.rules, |r| r.src, c) {
                Meet::Inside(i) => out.push(self.rules[i].restrict(c)?),
                Meet::Extensions(r) => out.extend_from_slice(&self.rules[r]),
            }
        }
        Ok(out)
    }

    /// `f(a)`.
    pub fn image(&self, a: &Clopen) -> Result<Clopen> {
        Ok(Clopen::from_words(
            self.restrict(a)?.into_iter().map(|r| r.dst).collect(),
        ))
    }

    /// `f^{-1}(b)`.
    pub fn preimage(&self, b: &Clopen) -> Result<Clopen> {
        let mut out = Vec::new();
        for r in &self.rules {
            match meet(b.cylinders(), &r.dst) {
                Meet::Inside(_) => out.push(r.src),
                Meet::Extensions(range) => {
                    for c in &b.cylinders()[range] {
                        out.push(r.src.concat(&c.drop_prefix(r.dst.len()))?);
                    }
                }
            }
        }
        Ok(Clopen::from_words(out))
    }

    /// `g ∘ f` (apply `self` first, then `g`).
    pub fn then(&self, g: &PrefixMap) -> Result<PrefixMap> {
        compose(self, g)
    }

    /// `f^n`.
    pub fn iterate(&self, n: u64) -> Result<PrefixMap> {
        iterate(self, n)
    }

    /// `f^{-1}` for a homeomorphism.
    pub fn inverse(&self) -> Result<PrefixMap> {
        if !self.is_homeomorphism() {
            return Err(Error::Precondition("only homeomorphisms are invertible".into()));
        }
        PrefixMap::new(self.rules.iter().map(|r| Rule::new(r.dst, r.src)).collect())
    }

    /// The collection `f(Q) = {f(a) : a ∈ Q}`.
    pub fn image_family(&self, q: &Partition) -> Result<Vec<Clopen>> {
        q.cells().iter().map(|c| self.image(c)).collect()
    }
}

/// `g ∘ f`: the rule system of "first `f`, then `g`".
pub fn compose(f: &PrefixMap, g: &PrefixMap) -> Result<PrefixMap> {
    let mut out = Vec::with_capacity(f.rules.len());
    for r in &f.rules {
        match meet_by(&g.rules, |q| q.src, &r.dst) {
            Meet::Inside(i) => {
                let q = &g.rules[i];
                out.push(Rule::new(r.src, q.rewrite(&r.dst)?));
            }
            Meet::Extensions(range) => {
                for q in &g.rules[range] {
                    let src = r.src.concat(&q.src.drop_prefix(r.dst.len()))?;
                    out.push(Rule::new(src, q.dst));
                }
            }
        }
    }
    // Sources stay sorted: each f-source block is refined in order.
    Ok(PrefixMap {
        rules: merge_rules(out),
    })
}

/// `f^n` by repeated squaring (`f^0` is the identity).
pub fn iterate(f: &PrefixMap, mut n: u64) -> Result<PrefixMap> {
    let mut acc = PrefixMap::identity();
    let mut base = f.clone();
    while n > 0 {
        if n & 1 == 1 {
            acc = compose(&acc, &base)?;
        }
        n >>= 1;
        if n > 0 {
            base = compose(&base, &base)?;
        }
    }
    Ok(acc)
}

fn tail_bits(dst: &Word, t: &Word, skip: usize) -> Vec<bool> {
    let mut v = dst.to_bits();
    v.extend((skip..t.len()).map(|i| t.bit(i)));
    v
}

/// `d̃(f, g) = max_σ d(f(σ), g(σ))`, exact.
pub fn sup_dist(f: &PrefixMap, g: &PrefixMap) -> Rat {
    let (a, b) = (&f.rules, &g.rules);
    let (mut i, mut j) = (0, 0);
    // Largest value seen, encoded by the 1-based position `n` of 1/n
    // (smaller is larger); `None` means all regions agree.
    let mut best: Option<usize> = None;
    while i < a.len() && j < b.len() {
        let (x, y) = (&a[i], &b[j]);
        let t = if x.src.is_prefix_of(&y.src) {
            y.src
        } else if y.src.is_prefix_of(&x.src) {
            x.src
        } else if x.src < y.src {
            i += 1;
            continue;
        } else {
            j += 1;
            continue;
        };
        let u = tail_bits(&x.dst, &t, x.src.len());
        let v = tail_bits(&y.dst, &t, y.src.len());
        let n = match u.iter().zip(&v).position(|(p, q)| p != q) {
            Some(p) => Some(p + 1),
            None if u.len() == v.len() => None,
            None => Some(u.len().min(v.len()) + 1),
        };
        if let Some(n) = n {
            best = Some(best.map_or(n, |b| b.min(n)));
        }
        if t == y.src {
            j += 1;
        } else {
            i += 1;
        }
    }
    best.map_or(Rat::ZERO, |n| Rat::recip(n as u64))
}

/// `f ~_P g`: `f(σ)` and `g(σ)` lie in the same cell of `P` for every `σ`.
pub fn sim_p(f: &PrefixMap, g: &PrefixMap, p: &Partition) -> Result<bool> {
    for c in p.cells() {
        if f.preimage(c)? != g.preimage(c)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Rules mapping the clopen set `a` homeomorphically onto `b`.
///
/// Cylinder counts are equalized by repeatedly splitting the
/// lexicographically first shortest cylinder of the side with fewer
/// cylinders; the `k`-th cylinder of `a` then maps onto the `k`-th of `b`.
pub fn clopen_bijection(a: &Clopen, b: &Clopen) -> Result<Vec<Rule>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Precondition("bijection between empty and nonempty sets".into()));
    }
    let mut xa = a.cylinders().to_vec();
    let mut xb = b.cylinders().to_vec();
    while xa.len() != xb.len() {
        let (small, need) = if xa.len() < xb.len() {
            let n = xb.len() - xa.len();
            (&mut xa, n)
        } else {
            let n = xa.len() - xb.len();
            (&mut xb, n)
        };
        split_shortest(small, need)?;
    }
    Ok(xa
        .into_iter()
        .zip(xb)
        .map(|(s, d)| Rule::new(s, d))
        .collect())
}

/// Splits up to `need` shortest cylinders (in lexicographic order), each
/// into its two children; one pass handles a single length level.
fn split_shortest(words: &mut Vec<Word>, need: usize) -> Result<()> {
    let min = words.iter().map(Word::len).min().expect("nonempty");
    let mut budget = need;
    let mut out = Vec::with_capacity(words.len() + need);
    for w in words.iter() {
        if budget > 0 && w.len() == min {
            out.push(w.child(false)?);
            out.push(w.child(true)?);
            budget -= 1;
        } else {
            out.push(*w);
        }
    }
    *words = out;
    Ok(())
}

impl fmt::Display for PrefixMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, r) in self.rules.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{:?}→{:?}", r.src, r.dst)?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for PrefixMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Serialize, Deserialize)]
struct PrefixMapRepr {
    rules: Vec<Rule>,
}

impl Serialize for PrefixMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PrefixMapRepr {
            rules: self.rules.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PrefixMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<PrefixMap, D::Error> {
        let r = PrefixMapRepr::deserialize(d)?;
        PrefixMap::new(r.rules).map_err(serde::de::Error::custom)
    }
}

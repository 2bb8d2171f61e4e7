//! Clopen subsets of the Cantor space as canonical antichains of words.
//!
//! A clopen set is a finite union of cylinders. The canonical form is a sorted
//! antichain (no word is a prefix of another) in which no pair of siblings
//! `w0`, `w1` occurs; the two would be merged into `w`. Canonical forms are
//! unique, so structural equality is set equality.

use crate::core::point::Point;
use crate::core::rat::Rat;
use crate::core::word::Word;
use crate::error::{Error, Result};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::ops::Range;

/// A clopen subset of `2^ℕ` in canonical form.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Clopen {
    cyl: Vec<Word>,
}

/// How the cylinders of a sorted antichain meet a cylinder `[w]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Meet {
    /// `[w]` lies inside the cylinder at this index.
    Inside(usize),
    /// The cylinders in this index range are exactly those extending `w`
    /// (possibly empty).
    Extensions(Range<usize>),
}

/// Locates the cylinders of a sorted antichain that meet `[w]`.
pub fn meet(cyl: &[Word], w: &Word) -> Meet {
    meet_by(cyl, |c| *c, w)
}

/// [`meet`] over any slice sorted by an antichain-valued key.
pub fn meet_by<T>(items: &[T], key: impl Fn(&T) -> Word, w: &Word) -> Meet {
    let idx = items.partition_point(|c| key(c) <= *w);
    if idx > 0 && key(&items[idx - 1]).is_prefix_of(w) {
        return Meet::Inside(idx - 1);
    }
    let start = items.partition_point(|c| key(c) < *w);
    let mut end = start;
    while end < items.len() && w.is_prefix_of(&key(&items[end])) {
        end += 1;
    }
    Meet::Extensions(start..end)
}

/// Merges sibling pairs of a sorted antichain (stack pass).
fn merge_siblings(sorted: Vec<Word>) -> Vec<Word> {
    let mut out: Vec<Word> = Vec::with_capacity(sorted.len());
    for w in sorted {
        let mut cur = w;
        loop {
            match (out.last(), cur.last_bit()) {
                (Some(top), Some(true)) if Some(*top) == cur.sibling() => {
                    out.pop();
                    cur = cur.parent().expect("nonempty");
                }
                _ => break,
            }
        }
        out.push(cur);
    }
    out
}

impl Clopen {
    /// The empty set.
    pub fn empty() -> Clopen {
        Clopen { cyl: vec![] }
    }

    /// The whole space `{ε}`.
    pub fn full() -> Clopen {
        Clopen {
            cyl: vec![Word::EMPTY],
        }
    }

    /// The cylinder `[w]`.
    pub fn cylinder(w: Word) -> Clopen {
        Clopen { cyl: vec![w] }
    }

    /// Canonical clopen generated by arbitrary words (union of cylinders).
    pub fn from_words(mut words: Vec<Word>) -> Clopen {
        words.sort_unstable();
        words.dedup();
        let mut anti: Vec<Word> = Vec::with_capacity(words.len());
        for w in words {
            if let Some(last) = anti.last() {
                if last.is_prefix_of(&w) {
                    continue;
                }
            }
            anti.push(w);
        }
        Clopen {
            cyl: merge_siblings(anti),
        }
    }

    /// Canonical clopen from a sorted antichain (only sibling merging needed).
    pub fn from_sorted_antichain(words: Vec<Word>) -> Clopen {
        debug_assert!(words.windows(2).all(|p| p[0] < p[1] && !p[0].is_prefix_of(&p[1])));
        Clopen {
            cyl: merge_siblings(words),
        }
    }

    /// Parses bit-string literals; panics on malformed input (for literals).
    pub fn lit(words: &[&str]) -> Clopen {
        Clopen::from_words(words.iter().map(|s| s.parse().expect("word literal")).collect())
    }

    /// The canonical cylinder words.
    pub fn cylinders(&self) -> &[Word] {
        &self.cyl
    }

    /// Re-canonicalizes (idempotent on canonical values).
    pub fn canonicalize(&self) -> Clopen {
        Clopen::from_words(self.cyl.clone())
    }

    /// Whether the set is empty.
    pub fn is_empty(&self) -> bool {
        self.cyl.is_empty()
    }

    /// Whether the set is the whole space.
    pub fn is_full(&self) -> bool {
        self.cyl.len() == 1 && self.cyl[0].is_empty()
    }

    /// Number of canonical cylinders.
    pub fn len(&self) -> usize {
        self.cyl.len()
    }

    /// Longest cylinder word.
    pub fn max_depth(&self) -> usize {
        self.cyl.iter().map(Word::len).max().unwrap_or(0)
    }

    /// Smallest cylinder word (cells are ordered by it).
    pub fn first_word(&self) -> Option<Word> {
        self.cyl.first().copied()
    }

    /// The lexicographically least point of the set.
    pub fn least_point(&self) -> Option<Point> {
        self.cyl.first().map(Point::least_in)
    }

    /// Union.
    pub fn union(&self, other: &Clopen) -> Clopen {
        let mut all = self.cyl.clone();
        all.extend_from_slice(&other.cyl);
        Clopen::from_words(all)
    }

    /// Union of many sets.
    pub fn union_all<'a, I: IntoIterator<Item = &'a Clopen>>(sets: I) -> Clopen {
        let mut all = Vec::new();
        for s in sets {
            all.extend_from_slice(&s.cyl);
        }
        Clopen::from_words(all)
    }

    /// Intersection (two-pointer merge over the sorted antichains).
    pub fn intersect(&self, other: &Clopen) -> Clopen {
        let (a, b) = (&self.cyl, &other.cyl);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            let (x, y) = (a[i], b[j]);
            if x.is_prefix_of(&y) {
                out.push(y);
                j += 1;
            } else if y.is_prefix_of(&x) {
                out.push(x);
                i += 1;
            } else if x < y {
                i += 1;
            } else {
                j += 1;
            }
        }
        Clopen::from_sorted_antichain(out)
    }

    /// Whether the sets meet.
    pub fn meets(&self, other: &Clopen) -> bool {
        let (a, b) = (&self.cyl, &other.cyl);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            let (x, y) = (a[i], b[j]);
            if x.comparable(&y) {
                return true;
            } else if x < y {
                i += 1;
            } else {
                j += 1;
            }
        }
        false
    }

    /// Complement in `2^ℕ`.
    pub fn complement(&self) -> Clopen {
        fn go(words: &[Word], prefix: Word, out: &mut Vec<Word>) {
            if words.is_empty() {
                out.push(prefix);
                return;
            }
            if words[0] == prefix {
                return;
            }
            let k = prefix.len();
            let idx = words.partition_point(|w| !w.bit(k));
            // Words strictly extend `prefix`, so the children are within cap.
            let p0 = Word::raw_unchecked(prefix.raw(), k + 1);
            let p1 = p0.sibling().expect("nonempty");
            go(&words[..idx], p0, out);
            go(&words[idx..], p1, out);
        }
        let mut out = Vec::new();
        go(&self.cyl, Word::EMPTY, &mut out);
        Clopen::from_sorted_antichain(out)
    }

    /// Set difference `self ∖ other`.
    pub fn difference(&self, other: &Clopen) -> Clopen {
        if other.is_empty() || self.is_empty() {
            return self.clone();
        }
        self.intersect(&other.complement())
    }

    /// Whether `self ⊆ other`.
    pub fn is_subset(&self, other: &Clopen) -> bool {
        &self.intersect(other) == self
    }

    /// Whether `self ⊊ other`.
    pub fn is_proper_subset(&self, other: &Clopen) -> bool {
        self != other && self.is_subset(other)
    }

    /// Whether the point lies in the set.
    pub fn contains_point(&self, x: &Point) -> bool {
        let key = x.key();
        matches!(meet(&self.cyl, &key), Meet::Inside(_))
    }

    /// Whether the cylinder `[w]` lies inside the set.
    pub fn contains_cylinder(&self, w: &Word) -> bool {
        match meet(&self.cyl, w) {
            Meet::Inside(_) => true,
            Meet::Extensions(r) => {
                r.len() > 1 && Clopen::from_sorted_antichain(self.cyl[r].to_vec()).cyl == vec![*w]
            }
        }
    }

    /// Diameter `1/(L+1)` with `L` the longest common prefix of the set.
    pub fn diam(&self) -> Result<Rat> {
        let (first, last) = match (self.cyl.first(), self.cyl.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::EmptyClopen),
        };
        Ok(Rat::recip(first.lcp(last) as u64 + 1))
    }

    /// Splits the set into `n` nonempty clopen pieces: all cylinders are
    /// extended by the least number of extra bits giving at least `n`
    /// subcylinders, which are then grouped into `n` contiguous runs in
    /// lexicographic order (sizes differ by at most one, larger runs first).
    pub fn split(&self, n: usize) -> Result<Vec<Clopen>> {
        if n == 0 {
            return Err(Error::Precondition("cannot split into zero pieces".into()));
        }
        if self.is_empty() {
            return Err(Error::Precondition("cannot split the empty set".into()));
        }
        let mut k = 0usize;
        while self.cyl.len() << k < n {
            k += 1;
        }
        let mut subs = Vec::with_capacity(self.cyl.len() << k);
        for c in &self.cyl {
            subs.extend(c.extensions(k)?);
        }
        let total = subs.len();
        let (base, extra) = (total / n, total % n);
        let mut out = Vec::with_capacity(n);
        let mut it = subs.into_iter();
        for i in 0..n {
            let size = base + usize::from(i < extra);
            out.push(Clopen::from_sorted_antichain(it.by_ref().take(size).collect()));
        }
        Ok(out)
    }

    /// A proper nonempty subset: the lexicographically least cylinder with
    /// one `0` appended.
    pub fn least_proper_subcylinder(&self) -> Result<Clopen> {
        let first = self
            .cyl
            .first()
            .ok_or_else(|| Error::Precondition("empty set has no proper subset".into()))?;
        Ok(Clopen::cylinder(first.child(false)?))
    }
}

/// Maximum diameter over a nonempty collection of nonempty sets.
pub fn mesh<'a, I: IntoIterator<Item = &'a Clopen>>(sets: I) -> Result<Rat> {
    let mut best: Option<Rat> = None;
    for s in sets {
        let d = s.diam()?;
        best = Some(best.map_or(d, |b| b.max(d)));
    }
    best.ok_or_else(|| Error::EmptyCollection("mesh of an empty collection".into()))
}

impl fmt::Display for Clopen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, w) in self.cyl.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{w:?}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for Clopen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Serialize, Deserialize)]
struct ClopenRepr {
    cyl: Vec<Word>,
}

impl Serialize for Clopen {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ClopenRepr {
            cyl: self.cyl.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Clopen {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Clopen, D::Error> {
        let r = ClopenRepr::deserialize(d)?;
        Ok(Clopen::from_words(r.cyl))
    }
}

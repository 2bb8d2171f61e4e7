//! Eventually periodic points of the Cantor space and the metric `d`.
//!
//! A [`Point`] denotes `pre · per · per · …`. The representation is canonical:
//! the period is primitive and the preperiod is as short as possible, so two
//! points are equal as sequences iff they are equal as values.

use crate::core::rat::Rat;
use crate::core::word::{Word, D_MAX};
use crate::error::{Error, Result};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

/// An eventually periodic binary sequence in canonical form.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pre: Vec<bool>,
    per: Vec<bool>,
}

fn bits_to_string(b: &[bool]) -> String {
    b.iter().map(|&x| if x { '1' } else { '0' }).collect()
}

fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::Parse(format!("invalid bit {c:?} in {s:?}"))),
        })
        .collect()
}

/// Shortest `p` dividing `len` such that `per` is `per[..p]` repeated.
fn primitive_root_len(per: &[bool]) -> usize {
    let n = per.len();
    (1..=n)
        .filter(|p| n.is_multiple_of(*p))
        .find(|&p| (p..n).all(|i| per[i] == per[i - p]))
        .unwrap_or(n)
}

impl Point {
    /// Builds `pre · per^∞` and canonicalizes it.
    pub fn new(pre: Vec<bool>, per: Vec<bool>) -> Result<Point> {
        if per.is_empty() {
            return Err(Error::Invalid("point period must be nonempty".into()));
        }
        let mut p = Point { pre, per };
        p.canonicalize();
        Ok(p)
    }

    /// Parses `pre` and `per` bit strings.
    pub fn parse(pre: &str, per: &str) -> Result<Point> {
        Point::new(parse_bits(pre)?, parse_bits(per)?)
    }

    /// The constant sequence `b^∞`.
    pub fn constant(b: bool) -> Point {
        Point {
            pre: vec![],
            per: vec![b],
        }
    }

    /// `w · 0^∞`, the lexicographically least point of the cylinder `[w]`.
    pub fn least_in(w: &Word) -> Point {
        Point::new(w.to_bits(), vec![false]).expect("nonempty period")
    }

    fn canonicalize(&mut self) {
        let p = primitive_root_len(&self.per);
        self.per.truncate(p);
        while let (Some(&a), Some(&b)) = (self.pre.last(), self.per.last()) {
            if a != b {
                break;
            }
            self.pre.pop();
            self.per.rotate_right(1);
        }
    }

    /// Preperiod bits.
    pub fn preperiod(&self) -> &[bool] {
        &self.pre
    }

    /// Period bits (primitive).
    pub fn period(&self) -> &[bool] {
        &self.per
    }

    /// The `i`-th coordinate (0-based).
    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        if i < self.pre.len() {
            self.pre[i]
        } else {
            self.per[(i - self.pre.len()) % self.per.len()]
        }
    }

    /// The first `k ≤ D_MAX` coordinates as a word (ignores the depth cap).
    pub fn prefix_word(&self, k: usize) -> Word {
        let k = k.min(D_MAX);
        let mut bits: u128 = 0;
        for i in 0..k {
            if self.bit(i) {
                bits |= 1u128 << (127 - i);
            }
        }
        // `from_raw` may refuse lengths above a lowered cap; lookups always
        // need the full-width key, so build it directly when that happens.
        Word::from_raw(bits, k).unwrap_or_else(|_| key_word(bits, k))
    }

    /// The full-width lookup key: the first `D_MAX` coordinates.
    pub fn key(&self) -> Word {
        self.prefix_word(D_MAX)
    }

    /// The shifted point `σ(k), σ(k+1), …`.
    pub fn drop(&self, k: usize) -> Point {
        if k <= self.pre.len() {
            return Point {
                pre: self.pre[k..].to_vec(),
                per: self.per.clone(),
            };
        }
        let r = (k - self.pre.len()) % self.per.len();
        let mut per = self.per.clone();
        per.rotate_left(r);
        Point { pre: vec![], per }
    }

    /// `w · self`.
    pub fn prepend(&self, w: &Word) -> Point {
        let mut pre = w.to_bits();
        pre.extend_from_slice(&self.pre);
        let mut p = Point {
            pre,
            per: self.per.clone(),
        };
        p.canonicalize();
        p
    }

    /// Whether the point lies in the cylinder `[w]`.
    pub fn in_cylinder(&self, w: &Word) -> bool {
        (0..w.len()).all(|i| self.bit(i) == w.bit(i))
    }

    /// Size of the representation (preperiod plus period length).
    pub fn size(&self) -> usize {
        self.pre.len() + self.per.len()
    }
}

/// Builds a word without consulting the depth cap (internal lookup keys).
fn key_word(bits: u128, k: usize) -> Word {
    Word::raw_unchecked(bits, k)
}

/// The metric `d(x, y) = 1/n` with `n` the first (1-based) position where the
/// sequences differ, and `0` if they are equal.
pub fn dist(x: &Point, y: &Point) -> Rat {
    if x == y {
        return Rat::ZERO;
    }
    let bound = x.pre.len().max(y.pre.len())
        + num_integer::lcm(x.per.len(), y.per.len());
    for i in 0..bound {
        if x.bit(i) != y.bit(i) {
            return Rat::recip(i as u64 + 1);
        }
    }
    // Distinct canonical points must differ within the bound.
    unreachable!("distinct eventually periodic points agree on the comparison window")
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", bits_to_string(&self.pre), bits_to_string(&self.per))
    }
}

impl std::str::FromStr for Point {
    type Err = Error;

    /// Parses the display form `pre(per)`.
    fn from_str(s: &str) -> Result<Point> {
        let s = s.trim();
        let (pre, rest) = s
            .split_once('(')
            .ok_or_else(|| Error::Parse(format!("point {s:?} is not of the form pre(per)")))?;
        let per = rest
            .strip_suffix(')')
            .ok_or_else(|| Error::Parse(format!("point {s:?} lacks a closing parenthesis")))?;
        Point::parse(pre, per)
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Serialize, Deserialize)]
struct PointRepr {
    pre: String,
    per: String,
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PointRepr {
            pre: bits_to_string(&self.pre),
            per: bits_to_string(&self.per),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Point, D::Error> {
        let r = PointRepr::deserialize(d)?;
        Point::parse(&r.pre, &r.per).map_err(serde::de::Error::custom)
    }
}

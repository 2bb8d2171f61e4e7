//! Finite binary words and the rule-depth cap.
//!
//! A [`Word`] is a bit string of length at most [`D_MAX`], stored
//! left-aligned in a `u128`. With that layout the derived ordering on
//! `(bits, len)` is exactly the lexicographic order on strings: a prefix sorts
//! before each of its extensions, and `0…` sorts before `1…`.

use crate::error::{Error, Result};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::OnceLock;

/// Build-time maximum word length (bits).
pub const D_MAX: usize = 128;

/// Environment variable that may lower the active depth cap.
pub const DEPTH_CAP_ENV: &str = "CANTOR_DEPTH_CAP";

static CAP_OVERRIDE: AtomicUsize = AtomicUsize::new(D_MAX);
static ENV_CAP: OnceLock<usize> = OnceLock::new();

/// The depth cap in force: `D_MAX`, lowered by `CANTOR_DEPTH_CAP` and by
/// [`lower_depth_cap`]. It can never be raised above `D_MAX`.
pub fn depth_cap() -> usize {
    let env = *ENV_CAP.get_or_init(|| {
        std::env::var(DEPTH_CAP_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .map_or(D_MAX, |v| v.min(D_MAX))
    });
    env.min(CAP_OVERRIDE.load(AtomicOrdering::Relaxed))
}

/// Lowers the process-wide depth cap. Requests above the current cap are
/// ignored, so the cap only ever moves downwards.
pub fn lower_depth_cap(cap: usize) {
    CAP_OVERRIDE.fetch_min(cap, AtomicOrdering::Relaxed);
}

fn check_len(needed: usize) -> Result<()> {
    let cap = depth_cap();
    if needed > cap {
        Err(Error::DepthOverflow { needed, cap })
    } else {
        Ok(())
    }
}

/// A finite binary word; as a cylinder it denotes all its infinite
/// extensions. The empty word denotes the whole space.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word {
    bits: u128,
    len: u8,
}

#[inline]
fn mask(len: usize) -> u128 {
    if len == 0 {
        0
    } else {
        u128::MAX << (128 - len)
    }
}

impl Word {
    /// The empty word ε.
    pub const EMPTY: Word = Word { bits: 0, len: 0 };

    /// Builds a word from raw left-aligned bits; bits beyond `len` are cleared.
    pub fn from_raw(bits: u128, len: usize) -> Result<Word> {
        check_len(len)?;
        Ok(Word {
            bits: bits & mask(len),
            len: len as u8,
        })
    }

    /// Builds a word of length `len ≤ D_MAX` without consulting the runtime
    /// cap. Used for full-width lookup keys, which never become rule data.
    pub(crate) fn raw_unchecked(bits: u128, len: usize) -> Word {
        debug_assert!(len <= D_MAX);
        Word {
            bits: bits & mask(len),
            len: len as u8,
        }
    }

    /// Builds a word from a bit slice.
    pub fn from_bits(bits: &[bool]) -> Result<Word> {
        check_len(bits.len())?;
        let mut w = Word::EMPTY;
        for &b in bits {
            w = w.child(b)?;
        }
        Ok(w)
    }

    /// Length in bits.
    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    /// Whether this is ε.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Left-aligned raw bits.
    #[inline]
    pub fn raw(&self) -> u128 {
        self.bits
    }

    /// The `i`-th bit (0-based).
    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        debug_assert!(i < self.len());
        (self.bits >> (127 - i)) & 1 == 1
    }

    /// Bits as a vector.
    pub fn to_bits(&self) -> Vec<bool> {
        (0..self.len()).map(|i| self.bit(i)).collect()
    }

    /// `self · b`.
    pub fn child(&self, b: bool) -> Result<Word> {
        let n = self.len() + 1;
        check_len(n)?;
        let bits = if b {
            self.bits | (1u128 << (128 - n))
        } else {
            self.bits
        };
        Ok(Word {
            bits,
            len: n as u8,
        })
    }

    /// `self · other`.
    pub fn concat(&self, other: &Word) -> Result<Word> {
        let n = self.len() + other.len();
        check_len(n)?;
        let bits = if self.is_empty() {
            other.bits
        } else if self.len() >= 128 {
            self.bits
        } else {
            self.bits | (other.bits >> self.len())
        };
        Ok(Word {
            bits,
            len: n as u8,
        })
    }

    /// The first `k` bits.
    pub fn prefix(&self, k: usize) -> Word {
        let k = k.min(self.len());
        Word {
            bits: self.bits & mask(k),
            len: k as u8,
        }
    }

    /// The word without its first `k` bits.
    pub fn drop_prefix(&self, k: usize) -> Word {
        let k = k.min(self.len());
        let bits = if k >= 128 { 0 } else { self.bits << k };
        Word {
            bits,
            len: (self.len() - k) as u8,
        }
    }

    /// Whether `self` is a (not necessarily proper) prefix of `other`.
    #[inline]
    pub fn is_prefix_of(&self, other: &Word) -> bool {
        self.len <= other.len && (other.bits & mask(self.len())) == self.bits
    }

    /// Whether the two cylinders intersect (one word is a prefix of the other).
    #[inline]
    pub fn comparable(&self, other: &Word) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    /// Length of the longest common prefix.
    pub fn lcp(&self, other: &Word) -> usize {
        let x = self.bits ^ other.bits;
        let common = x.leading_zeros() as usize;
        common.min(self.len()).min(other.len())
    }

    /// The word with its last bit flipped (`None` for ε).
    pub fn sibling(&self) -> Option<Word> {
        if self.len == 0 {
            return None;
        }
        Some(Word {
            bits: self.bits ^ (1u128 << (128 - self.len())),
            len: self.len,
        })
    }

    /// The word without its last bit (`None` for ε).
    pub fn parent(&self) -> Option<Word> {
        if self.len == 0 {
            None
        } else {
            Some(self.prefix(self.len() - 1))
        }
    }

    /// Whether the last bit is 1.
    pub fn last_bit(&self) -> Option<bool> {
        if self.len == 0 {
            None
        } else {
            Some(self.bit(self.len() - 1))
        }
    }

    /// All `2^k` extensions of length `len + k`, in lexicographic order.
    pub fn extensions(&self, k: usize) -> Result<Vec<Word>> {
        let n = self.len() + k;
        check_len(n)?;
        if k == 0 {
            return Ok(vec![*self]);
        }
        if k >= 32 {
            return Err(Error::Invalid(format!("refusing to enumerate 2^{k} extensions")));
        }
        let mut out = Vec::with_capacity(1 << k);
        for i in 0..(1u128 << k) {
            let tail = i << (128 - k);
            out.push(Word {
                bits: self.bits | (tail >> self.len()),
                len: n as u8,
            });
        }
        Ok(out)
    }

    /// The least word (in lexicographic order) that is not an extension of
    /// `self` but is greater than all of them; `None` if `self` is all ones.
    pub fn successor_bound(&self) -> Option<Word> {
        let mut w = *self;
        while let Some(b) = w.last_bit() {
            let p = w.parent().expect("nonempty");
            if !b {
                return Some(p.child(true).expect("same length"));
            }
            w = p;
        }
        None
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            f.write_str("ε")
        } else {
            write!(f, "{self}")
        }
    }
}

impl FromStr for Word {
    type Err = Error;
    fn from_str(s: &str) -> Result<Word> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => return Err(Error::Parse(format!("invalid bit {c:?} in word {s:?}"))),
            }
        }
        Word::from_bits(&bits)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Word, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses a word, panicking on malformed input. Intended for literals in
/// examples and tests.
pub fn w(s: &str) -> Word {
    s.parse().expect("valid word literal")
}

//! Exact nonnegative rationals.
//!
//! All distances in the system are `0` or `1/n`; sums of two such values
//! appear in the approximation bounds. [`Rat`] wraps an exact reduced
//! fraction and renders as `p/q` (or `p` when the denominator is 1).

use crate::error::{Error, Result};
use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::ops::Add;
use std::str::FromStr;

/// An exact nonnegative rational number in lowest terms.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rat(Ratio<u64>);

impl Rat {
    /// Zero.
    pub const ZERO: Rat = Rat(Ratio::new_raw(0, 1));
    /// One.
    pub const ONE: Rat = Rat(Ratio::new_raw(1, 1));

    /// `num/den`, reduced. Panics if `den == 0`.
    pub fn new(num: u64, den: u64) -> Rat {
        Rat(Ratio::new(num, den))
    }

    /// `1/n`. Panics if `n == 0`.
    pub fn recip(n: u64) -> Rat {
        Rat::new(1, n)
    }

    /// Numerator in lowest terms.
    pub fn numer(&self) -> u64 {
        *self.0.numer()
    }

    /// Denominator in lowest terms.
    pub fn denom(&self) -> u64 {
        *self.0.denom()
    }

    /// `self / k`. Panics if `k == 0`.
    pub fn div_int(self, k: u64) -> Rat {
        Rat(self.0 / k)
    }

    /// Whether the value is zero.
    pub fn is_zero(&self) -> bool {
        self.numer() == 0
    }
}

impl Add for Rat {
    type Output = Rat;
    fn add(self, rhs: Rat) -> Rat {
        Rat(self.0 + rhs.0)
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Rat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Rat> {
        let bad = || Error::Parse(format!("invalid rational {s:?} (expected \"p/q\" or \"p\")"));
        let s = s.trim();
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let n: u64 = n.parse().map_err(|_| bad())?;
        let d: u64 = d.parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        Ok(Rat::new(n, d))
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Rat, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_and_parse() {
        assert_eq!(Rat::recip(3).to_string(), "1/3");
        assert_eq!(Rat::ONE.to_string(), "1");
        assert_eq!(Rat::ZERO.to_string(), "0");
        assert_eq!("2/4".parse::<Rat>().unwrap(), Rat::recip(2));
        assert!("1/0".parse::<Rat>().is_err());
        assert_eq!(Rat::recip(2) + Rat::recip(3), Rat::new(5, 6));
        assert!(Rat::recip(3) < Rat::recip(2));
    }
}

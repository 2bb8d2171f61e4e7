//! Exact computational dynamics on the Cantor space.
//!
//! The crate represents clopen sets, partitions and prefix-substitution maps
//! of `2^ℕ` exactly, builds and classifies the transition digraphs of maps
//! relative to partitions, realizes and approximates maps by prescribed
//! digraph shapes, generates finite-stage witnesses for the generic
//! homeomorphism and generic continuous map, builds conjugacies between such
//! maps by back and forth, and certifies dynamical properties (shadowing,
//! absence of Li-Yorke pairs, odometer limit sets, recurrence and chain
//! continuity).
//!
//! All arithmetic is exact: distances are rationals `1/n`, sets are canonical
//! antichains of words, and every construction re-checks its own contract.

#![forbid(unsafe_code)]

pub mod approx;
pub mod cli;
pub mod conjugacy;
pub mod core;
pub mod digraph;
pub mod dynamics;
pub mod error;
pub mod generic;
pub mod sampling;

pub use crate::core::*;
pub use error::{Error, Result};

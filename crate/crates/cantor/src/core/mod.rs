//! Exact representation of the Cantor space `2^ℕ`: words, eventually periodic
//! points, the metric, clopen sets, partitions and prefix-substitution maps.

pub mod clopen;
pub mod partition;
pub mod point;
pub mod prefix_map;
pub mod rat;
pub mod word;

pub use clopen::{mesh, Clopen};
pub use partition::Partition;
pub use point::{dist, Point};
pub use prefix_map::{clopen_bijection, compose, iterate, sim_p, sup_dist, PrefixMap, Rule};
pub use rat::Rat;
pub use word::{depth_cap, lower_depth_cap, w, Word, D_MAX};

//! Seeded random generators for maps, partitions, points and digraphs.
//!
//! Used by the generators' choice streams, the property tests and the
//! examples. All generators are deterministic functions of the RNG state.

use crate::core::clopen::Clopen;
use crate::core::partition::Partition;
use crate::core::point::Point;
use crate::core::prefix_map::{PrefixMap, Rule};
use crate::core::word::Word;
use crate::digraph::Digraph;
use crate::error::Result;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

/// The RNG used throughout the crate.
pub type SeededRng = ChaCha8Rng;

/// An RNG seeded from a 64-bit seed.
pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random complete antichain of words of length `≤ max_depth`; each word
/// shorter than `max_depth` is split with probability `p_split`.
pub fn complete_antichain<R: Rng>(rng: &mut R, max_depth: usize, p_split: f64) -> Vec<Word> {
    let mut out = Vec::new();
    let mut stack = vec![Word::EMPTY];
    while let Some(w) = stack.pop() {
        if w.len() < max_depth && (w.is_empty() || rng.gen_bool(p_split)) {
            stack.push(w.child(true).expect("shallow"));
            stack.push(w.child(false).expect("shallow"));
        } else {
            out.push(w);
        }
    }
    out
}

/// A complete antichain with exactly `k ≥ 1` words of length `≤ max_depth`
/// (`k ≤ 2^max_depth`), grown by splitting random leaves.
pub fn antichain_of_size<R: Rng>(rng: &mut R, k: usize, max_depth: usize) -> Vec<Word> {
    assert!(k >= 1 && k <= 1usize << max_depth);
    let mut leaves = vec![Word::EMPTY];
    while leaves.len() < k {
        let splittable: Vec<usize> = (0..leaves.len()).filter(|&i| leaves[i].len() < max_depth).collect();
        let i = *splittable.choose(rng).expect("room to split");
        let w = leaves.swap_remove(i);
        leaves.push(w.child(false).expect("shallow"));
        leaves.push(w.child(true).expect("shallow"));
    }
    leaves.sort_unstable();
    leaves
}

/// A random homeomorphism whose rule sources and destinations have length
/// `≤ max_depth`: a random bijection between two random complete antichains
/// of equal size.
pub fn homeomorphism<R: Rng>(rng: &mut R, max_depth: usize) -> PrefixMap {
    let srcs = complete_antichain(rng, max_depth, 0.5);
    let k = srcs.len();
    let mut dsts = antichain_of_size(rng, k, max_depth);
    dsts.shuffle(rng);
    PrefixMap::new(srcs.into_iter().zip(dsts).map(|(s, d)| Rule::new(s, d)).collect())
        .expect("complete antichain")
}

/// A random continuous map with rules of depth `≤ max_depth`.
pub fn continuous_map<R: Rng>(rng: &mut R, max_depth: usize) -> PrefixMap {
    let srcs = complete_antichain(rng, max_depth, 0.5);
    let rules = srcs
        .into_iter()
        .map(|s| {
            let len = rng.gen_range(0..=max_depth);
            let bits: Vec<bool> = (0..len).map(|_| rng.gen()).collect();
            Rule::new(s, Word::from_bits(&bits).expect("shallow"))
        })
        .collect();
    PrefixMap::new(rules).expect("complete antichain")
}

/// A random partition: a random complete antichain of depth `≤ max_depth`
/// whose cylinders are grouped into at most `max_cells` random cells.
pub fn partition<R: Rng>(rng: &mut R, max_depth: usize, max_cells: usize) -> Partition {
    let words = complete_antichain(rng, max_depth, 0.6);
    let cells = rng.gen_range(1..=max_cells.min(words.len()).max(1));
    let mut groups: Vec<Vec<Word>> = vec![Vec::new(); cells];
    let mut order: Vec<usize> = (0..words.len()).collect();
    order.shuffle(rng);
    for (k, &i) in order.iter().enumerate() {
        let g = if k < cells { k } else { rng.gen_range(0..cells) };
        groups[g].push(words[i]);
    }
    Partition::new(groups.into_iter().map(Clopen::from_words).collect()).expect("partition")
}

/// A partition with exactly `n` cells (`n ≤ 2^max_depth`); a few extra
/// cylinders are distributed over random cells so that not every cell is a
/// single cylinder.
pub fn partition_with_cells<R: Rng>(rng: &mut R, n: usize, max_depth: usize) -> Partition {
    let n = n.max(1);
    let room = (1usize << max_depth) - n;
    let extra = rng.gen_range(0..=room.min(n).min(4));
    let mut words = antichain_of_size(rng, n + extra, max_depth);
    words.shuffle(rng);
    let mut groups: Vec<Vec<Word>> = words[..n].iter().map(|w| vec![*w]).collect();
    for w in &words[n..] {
        let g = rng.gen_range(0..n);
        groups[g].push(*w);
    }
    Partition::new(groups.into_iter().map(Clopen::from_words).collect()).expect("partition")
}

/// A random digraph on `n` vertices in which every vertex has at least one
/// outgoing and one incoming edge (no ends).
pub fn end_free_digraph<R: Rng>(rng: &mut R, n: usize, extra_edges: usize) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    // A random permutation guarantees in- and out-degree ≥ 1.
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    for (v, &p) in perm.iter().enumerate() {
        edges.push((v, p));
    }
    for _ in 0..extra_edges {
        edges.push((rng.gen_range(0..n), rng.gen_range(0..n)));
    }
    Ok(edges)
}

/// A random labeled digraph without ends on a random partition with `n`
/// cells of depth `≤ max_depth`.
pub fn labeled_end_free_digraph<R: Rng>(rng: &mut R, n: usize, max_depth: usize) -> Result<Digraph> {
    let p = partition_with_cells(rng, n, max_depth);
    let extra = rng.gen_range(0..=n);
    let edges = end_free_digraph(rng, p.len(), extra)?;
    Digraph::labeled(p, edges)
}

/// A random eventually periodic point with preperiod `< max_pre` and period
/// in `1..=max_per`.
pub fn point<R: Rng>(rng: &mut R, max_pre: usize, max_per: usize) -> Point {
    let pre_len = rng.gen_range(0..max_pre.max(1));
    let per_len = rng.gen_range(1..=max_per.max(1));
    let pre = (0..pre_len).map(|_| rng.gen()).collect();
    let per = (0..per_len).map(|_| rng.gen()).collect();
    Point::new(pre, per).expect("nonempty period")
}

/// A point whose first `depth` digits are uniform and independent, followed
/// by a random tail of period at most 3: a stand-in for a point drawn from
/// the uniform measure, accurate at resolution `2^-depth`.
pub fn typical_point<R: Rng>(rng: &mut R, depth: usize) -> Point {
    let pre: Vec<bool> = (0..depth).map(|_| rng.gen()).collect();
    let per_len = rng.gen_range(1..=3);
    Point::new(pre, (0..per_len).map(|_| rng.gen()).collect()).expect("nonempty period")
}

/// A random point inside the clopen set `a` (nonempty).
pub fn point_in<R: Rng>(rng: &mut R, a: &Clopen, max_pre: usize, max_per: usize) -> Point {
    let c = a.cylinders()[rng.gen_range(0..a.len())];
    point(rng, max_pre, max_per).prepend(&c)
}

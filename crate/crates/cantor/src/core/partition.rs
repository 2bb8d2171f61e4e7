//! Clopen partitions of the Cantor space.
//!
//! Cells are kept in a deterministic order: lexicographic by their smallest
//! cylinder word. A flat index of all cylinders allows point and cylinder
//! location by binary search.

use crate::core::clopen::{mesh, meet_by, Clopen, Meet};
use crate::core::point::Point;
use crate::core::rat::Rat;
use crate::core::word::Word;
use crate::error::{Error, Result};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A finite partition of `2^ℕ` into nonempty clopen cells.
#[derive(Clone, Debug)]
pub struct Partition {
    cells: Vec<Clopen>,
    /// All cylinders of all cells, sorted, with their cell index.
    index: Vec<(Word, usize)>,
}

impl PartialEq for Partition {
    fn eq(&self, other: &Partition) -> bool {
        self.cells == other.cells
    }
}

impl Eq for Partition {}

impl Partition {
    /// Validates and builds a partition; cells are reordered by their
    /// smallest cylinder word.
    pub fn new(mut cells: Vec<Clopen>) -> Result<Partition> {
        if cells.is_empty() {
            return Err(Error::Invalid("a partition needs at least one cell".into()));
        }
        if cells.iter().any(Clopen::is_empty) {
            return Err(Error::Invalid("partition cells must be nonempty".into()));
        }
        cells.sort_by_key(|c| c.first_word());
        let mut index: Vec<(Word, usize)> = cells
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.cylinders().iter().map(move |w| (*w, i)))
            .collect();
        index.sort_unstable();
        for pair in index.windows(2) {
            if pair[0].0.is_prefix_of(&pair[1].0) {
                return Err(Error::Invalid(format!(
                    "cells overlap on cylinder {:?}",
                    pair[1].0
                )));
            }
        }
        let union = Clopen::from_sorted_antichain(index.iter().map(|(w, _)| *w).collect());
        if !union.is_full() {
            return Err(Error::Invalid("cells do not cover the space".into()));
        }
        Ok(Partition { cells, index })
    }

    /// The trivial partition `{2^ℕ}`.
    pub fn trivial() -> Partition {
        Partition::new(vec![Clopen::full()]).expect("valid")
    }

    /// The uniform partition `B_d` into the `2^d` cylinders of length `d`.
    pub fn uniform(d: usize) -> Result<Partition> {
        let cells = Word::EMPTY
            .extensions(d)?
            .into_iter()
            .map(Clopen::cylinder)
            .collect();
        Partition::new(cells)
    }

    /// Cells in canonical order.
    pub fn cells(&self) -> &[Clopen] {
        &self.cells
    }

    /// The `i`-th cell.
    pub fn cell(&self, i: usize) -> &Clopen {
        &self.cells[i]
    }

    /// Number of cells.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    /// Always false (partitions are nonempty); provided for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Index of the cell containing the point.
    pub fn cell_of_point(&self, x: &Point) -> usize {
        match meet_by(&self.index, |e| e.0, &x.key()) {
            Meet::Inside(i) => self.index[i].1,
            Meet::Extensions(_) => unreachable!("cells cover the space"),
        }
    }

    /// Index of the cell containing the cylinder `[w]`, if a single one does.
    pub fn cell_of_word(&self, w: &Word) -> Option<usize> {
        match meet_by(&self.index, |e| e.0, w) {
            Meet::Inside(i) => Some(self.index[i].1),
            Meet::Extensions(r) => {
                let first = self.index[r.start].1;
                self.index[r].iter().all(|e| e.1 == first).then_some(first)
            }
        }
    }

    /// Index of the cell containing the clopen set, if a single one does.
    pub fn cell_containing(&self, a: &Clopen) -> Option<usize> {
        let mut found = None;
        for w in a.cylinders() {
            let i = self.cell_of_word(w)?;
            match found {
                None => found = Some(i),
                Some(j) if j != i => return None,
                _ => {}
            }
        }
        found
    }

    /// Indices of the cells meeting the clopen set, ascending.
    pub fn cells_meeting(&self, a: &Clopen) -> Vec<usize> {
        let mut out = Vec::new();
        for w in a.cylinders() {
            match meet_by(&self.index, |e| e.0, w) {
                Meet::Inside(i) => out.push(self.index[i].1),
                Meet::Extensions(r) => out.extend(self.index[r].iter().map(|e| e.1)),
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// The containment map from `self` onto the cells of `coarse`.
    pub fn refinement_map(&self, coarse: &Partition) -> Result<Vec<usize>> {
        self.cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                coarse.cell_containing(c).ok_or_else(|| {
                    Error::NotRefinement(format!("cell {i} {c} lies in no single coarse cell"))
                })
            })
            .collect()
    }

    /// Whether every cell of `self` lies inside a cell of `coarse`.
    pub fn refines(&self, coarse: &Partition) -> bool {
        self.refinement_map(coarse).is_ok()
    }

    /// The coarsest common refinement.
    pub fn common_refinement(&self, other: &Partition) -> Partition {
        let mut cells = Vec::new();
        for a in &self.cells {
            for j in other.cells_meeting(a) {
                let c = a.intersect(&other.cells[j]);
                if !c.is_empty() {
                    cells.push(c);
                }
            }
        }
        Partition::new(cells).expect("intersections of partitions partition the space")
    }

    /// Maximum cell diameter.
    pub fn mesh(&self) -> Rat {
        mesh(&self.cells).expect("cells are nonempty")
    }

    /// Least distance between points of distinct cells: `1/(L+1)` with `L`
    /// the longest prefix shared by cylinders of different cells.
    pub fn min_gap(&self) -> Result<Rat> {
        if self.cells.len() < 2 {
            return Err(Error::GapUndefined);
        }
        let best = self
            .index
            .windows(2)
            .filter(|p| p[0].1 != p[1].1)
            .map(|p| p[0].0.lcp(&p[1].0))
            .max()
            .expect("at least two cells");
        Ok(Rat::recip(best as u64 + 1))
    }

    /// Splits cell `i` into the given pieces (which must partition it).
    pub fn replace_cell(&self, i: usize, pieces: Vec<Clopen>) -> Result<Partition> {
        let union = Clopen::union_all(&pieces);
        if union != self.cells[i] {
            return Err(Error::Invalid("pieces do not partition the cell".into()));
        }
        let mut cells: Vec<Clopen> = self
            .cells
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, c)| c.clone())
            .collect();
        cells.extend(pieces);
        Partition::new(cells)
    }
}

#[derive(Serialize, Deserialize)]
struct PartitionRepr {
    cells: Vec<Clopen>,
}

impl Serialize for Partition {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PartitionRepr {
            cells: self.cells.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Partition, D::Error> {
        let r = PartitionRepr::deserialize(d)?;
        Partition::new(r.cells).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(cells: &[&[&str]]) -> Partition {
        Partition::new(cells.iter().map(|c| Clopen::lit(c)).collect()).unwrap()
    }

    #[test]
    fn validation() {
        assert!(Partition::new(vec![Clopen::lit(&["0"])]).is_err());
        assert!(Partition::new(vec![Clopen::lit(&["0"]), Clopen::lit(&["01", "1"])]).is_err());
        assert!(Partition::new(vec![]).is_err());
        assert_eq!(Partition::uniform(2).unwrap().len(), 4);
    }

    #[test]
    fn gaps() {
        assert_eq!(part(&[&["0"], &["1"]]).min_gap().unwrap(), Rat::ONE);
        assert_eq!(part(&[&["00"], &["01"], &["1"]]).min_gap().unwrap(), Rat::recip(2));
        assert_eq!(
            part(&[&["000"], &["001"], &["01"], &["1"]]).min_gap().unwrap(),
            Rat::recip(3)
        );
        assert_eq!(Partition::trivial().min_gap(), Err(Error::GapUndefined));
    }

    #[test]
    fn refinement() {
        let fine = Partition::uniform(2).unwrap();
        let coarse = Partition::uniform(1).unwrap();
        assert_eq!(fine.refinement_map(&coarse).unwrap(), vec![0, 0, 1, 1]);
        assert!(!coarse.refines(&fine));
        let odd = part(&[&["00", "11"], &["01", "10"]]);
        assert_eq!(odd.common_refinement(&coarse), fine);
    }

    #[test]
    fn location() {
        let p = part(&[&["00", "11"], &["01", "10"]]);
        assert_eq!(p.cell_of_point(&Point::parse("1", "1").unwrap()), 0);
        assert_eq!(p.cell_of_word(&"0".parse().unwrap()), None);
        assert_eq!(p.cell_of_word(&"101".parse().unwrap()), Some(1));
    }
}

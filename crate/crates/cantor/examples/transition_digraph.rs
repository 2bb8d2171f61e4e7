//! The transition digraph gr(f, P) of a map relative to a partition,
//! classified component by component and exported to DOT.

use cantor::digraph::{build_gr, classify_all, to_dot};
use cantor::{Partition, PrefixMap};

fn main() -> cantor::Result<()> {
    let add = PrefixMap::lit(&[("00", "10"), ("10", "01"), ("01", "11"), ("11", "00")]);
    let shift = PrefixMap::shift();
    let p = Partition::uniform(2)?;
    for (name, f) in [("add", &add), ("shift", &shift), ("swap", &PrefixMap::swap())] {
        let g = build_gr(f, &p)?;
        println!("{name}: edges {:?}", g.edges());
        for (c, class) in classify_all(&g)? {
            println!("  component {:?}: {:?}", c.vertices, class.shape);
        }
    }
    println!("{}", to_dot(&build_gr(&add, &p)?)?);
    Ok(())
}

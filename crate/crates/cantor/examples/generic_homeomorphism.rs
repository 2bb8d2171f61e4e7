//! Finite-stage witnesses for the generic homeomorphism: nested partitions
//! whose transition digraphs are dumbbells with factorial plate weights.

use cantor::generic::{check_property_p, generic_hom, hom_nesting, QSchedule};

fn main() -> cantor::Result<()> {
    let g = generic_hom(2, 7, QSchedule::Strict)?;
    println!("h: {} rules, depth {}", g.h.rules().len(), g.h.depth());
    for (i, w) in g.witnesses.iter().enumerate() {
        let v = check_property_p(&g.h, w, i + 1);
        println!(
            "stage {}: q = {}, {} cells, mesh {}, {} dumbbells, property holds: {}",
            i + 1,
            w.q,
            w.p.len(),
            w.p.mesh(),
            w.loops.len(),
            v.ok
        );
    }
    println!("nesting: {:?}", hom_nesting(&g.witnesses));
    // The strict schedule cannot reach a third stage within the cell budget.
    match generic_hom(3, 7, QSchedule::Strict) {
        Ok(_) => println!("three strict stages fit"),
        Err(e) => println!("three strict stages: {e}"),
    }
    Ok(())
}

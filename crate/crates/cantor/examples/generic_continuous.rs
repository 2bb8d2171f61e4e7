//! Finite-stage witnesses for the generic continuous map: nested partitions
//! whose transition digraphs are balloons of type (q!, q!).

use cantor::generic::{check_property_q, cont_nesting, generic_cont, QSchedule};

fn main() -> cantor::Result<()> {
    let g = generic_cont(2, 7, QSchedule::Strict)?;
    println!("f: {} rules, homeomorphism: {}", g.f.rules().len(), g.f.is_homeomorphism());
    for (i, w) in g.witnesses.iter().enumerate() {
        let v = check_property_q(&g.f, w, i + 1);
        println!(
            "stage {}: q = {}, {} cells, mesh {}, property holds: {}",
            i + 1,
            w.q,
            w.p.len(),
            w.p.mesh(),
            v.ok
        );
    }
    println!("nesting: {:?}", cont_nesting(&g.witnesses));
    Ok(())
}

//! Nonrecurrent bar families, absence of periodic points, chain continuity
//! and the equicontinuity defect of a generic homeomorphism.

use cantor::dynamics::{chain_modulus, equicontinuity_defect, recurrence_report, WitnessSeq};
use cantor::generic::{generic_cont, generic_hom, QSchedule};
use cantor::Rat;

fn main() -> cantor::Result<()> {
    let g = generic_hom(2, 7, QSchedule::Strict)?;
    let w = &g.witnesses[0];
    let r = recurrence_report(&g.h, w)?;
    for d in &r.dumbbells {
        println!(
            "dumbbell {}: {} certified nonrecurrent sets, {} loop cells",
            d.component,
            d.nonrecurrent.len(),
            d.loop_cells.len()
        );
    }
    println!("periodic point up to period {}: {:?}", r.periodic_bound, r.periodic_point);

    let set = &r.dumbbells[0].nonrecurrent[0].set;
    let x = set.least_point().expect("nonempty");
    let m = chain_modulus(&g.h, WitnessSeq::Hom(&g.witnesses), &x, Rat::recip(2), 1)?;
    println!("chain continuity at {x}: δ = {}, {} violations in {} chains", m.delta, m.violations, m.samples);

    let c = generic_cont(2, 7, QSchedule::Strict)?;
    let y = "(01)".parse()?;
    let m = chain_modulus(&c.f, WitnessSeq::Cont(&c.witnesses), &y, Rat::recip(2), 1)?;
    println!("continuous map at {y}: δ = {}, {} violations", m.delta, m.violations);

    let d = equicontinuity_defect(&g.h, w, 0, 3)?;
    println!("defect pair {} / {:?} at distance {:?}, exit after {:?} steps", d.y, d.companion, d.distance, d.exit);
    Ok(())
}

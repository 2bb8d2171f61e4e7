//! Conjugating two independently generated generic homeomorphisms by back
//! and forth, and assembling the conjugator with exact residual bounds.

use cantor::conjugacy::{back_and_forth_hom, commutes_check, conjugator};
use cantor::generic::{generic_hom, QSchedule};

fn main() -> cantor::Result<()> {
    let a = generic_hom(2, 1, QSchedule::Strict)?;
    let b = generic_hom(2, 2, QSchedule::Strict)?;
    let s = back_and_forth_hom(&a.h, &a.witnesses, &b.h, &b.witnesses, 2)?;
    println!("schedule of {} stages commutes: {}", s.stages.len(), commutes_check(&s).ok);
    let c = conjugator(&s, &a.h, &b.h)?;
    for r in &c.stages {
        println!(
            "stage {} ({:?}{}): residual {} ≤ bound {}",
            r.stage,
            r.direction,
            if r.inverted { ", inverted" } else { "" },
            r.residual,
            r.bound
        );
    }
    for cb in &c.cauchy {
        println!("d(h_{}, h_{}) = {} ≤ {}", cb.n, cb.m, cb.dist, cb.bound);
    }
    println!("conjugator: {} rules", c.h.rules().len());
    Ok(())
}

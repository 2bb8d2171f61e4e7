//! Odometers: carry addition, prime profiles, and the odometer covers of an
//! ω-limit set of a generic homeomorphism.

use cantor::dynamics::{bs_compare, m_profile, odometer_step, omega_covers, OdometerSpec};
use cantor::generic::{generic_hom, QSchedule};

fn main() -> cantor::Result<()> {
    let spec = OdometerSpec::new(vec![2, 3, 2])?;
    let mut x = vec![0, 0, 0];
    for _ in 0..13 {
        print!("{x:?} ");
        x = odometer_step(&spec, &x)?;
    }
    println!();
    let a = m_profile(&OdometerSpec::new(vec![2, 2])?, 100);
    let b = m_profile(&OdometerSpec::new(vec![4])?, 100);
    let c = m_profile(&OdometerSpec::new(vec![6, 10])?, 100);
    println!("(2,2) vs (4): {:?}; (2,2) vs (6,10): {:?}", bs_compare(&a, &b), bs_compare(&a, &c));

    let g = generic_hom(2, 7, QSchedule::Strict)?;
    let x = "(0)".parse()?;
    let oc = omega_covers(&g.h, &g.witnesses, &x, 2)?;
    println!("orbit settles after {} steps; α = {:?}", oc.settle, oc.alpha);
    for c in &oc.covers {
        println!("  stage {}: cycle of {} cells, mesh {}", c.stage, c.cells.len(), c.mesh);
    }
    println!("BK conditions: {:?}", oc.bk);
    Ok(())
}

//! Shadowing a random δ-pseudo-orbit of a generic homeomorphism by a real
//! orbit, verified exactly at every index.

use cantor::dynamics::{shadow, PseudoOrbit};
use cantor::generic::{generic_hom, QSchedule};
use cantor::sampling;

fn main() -> cantor::Result<()> {
    let g = generic_hom(2, 7, QSchedule::Strict)?;
    let w = &g.witnesses[1];
    let delta = w.p.min_gap()?.div_int(2);
    let mut rng = sampling::rng(9);
    for _ in 0..5 {
        let x0 = sampling::point(&mut rng, 12, 4);
        let po = PseudoOrbit::random(&mut rng, &g.h, x0, 100, delta);
        let s = shadow(&g.h, w, &po)?;
        println!(
            "δ = {delta}: {:?}, shadowing point {}, max distance {} ≤ ε = {}",
            s.case, s.point, s.max_dist, s.eps
        );
    }
    Ok(())
}

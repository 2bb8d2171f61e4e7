//! No Li-Yorke pairs: once two orbits share a cell of a witness partition,
//! they never separate again at that scale.

use cantor::digraph::{build_gr, classify_all};
use cantor::dynamics::{li_yorke_exclusion, random_in_ball, walk_prefix_coincidence, WitnessRef};
use cantor::generic::{generic_cont, generic_hom, QSchedule};
use cantor::sampling;

fn main() -> cantor::Result<()> {
    let h = generic_hom(2, 7, QSchedule::Strict)?;
    let f = generic_cont(2, 7, QSchedule::Strict)?;
    let mut rng = sampling::rng(2);
    for _ in 0..4 {
        let x = sampling::point(&mut rng, 12, 3);
        // A nearby partner, so that the two orbits are likely to merge.
        let y = random_in_ball(&mut rng, &x, cantor::Rat::recip(4), true);
        let a = li_yorke_exclusion(&h.h, WitnessRef::Hom(&h.witnesses[1]), &x, &y, 500)?;
        let b = li_yorke_exclusion(&f.f, WitnessRef::Cont(&f.witnesses[1]), &x, &y, 500)?;
        println!("{x} vs {y}: homeomorphism {a:?}, continuous map {b:?}");
    }
    let g = build_gr(&h.h, &h.witnesses[0].p)?;
    let all = classify_all(&g)?
        .iter()
        .map(|(_, cl)| walk_prefix_coincidence(&g, cl))
        .collect::<cantor::Result<Vec<_>>>()?;
    println!("walks separate at most once in every component: {:?}", all);
    Ok(())
}

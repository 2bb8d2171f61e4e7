//! Three equivalent formulations of a commuting schedule of graph maps,
//! evaluated on constructed fixtures and on random mutants.

use cantor::conjugacy::{alternating_fixture, condition_i, condition_ii, condition_iii, iso_fixture, mutate};
use cantor::{sampling, PrefixMap};

fn main() -> cantor::Result<()> {
    let mut rng = sampling::rng(5);
    let h = PrefixMap::lit(&[("00", "10"), ("10", "01"), ("01", "11"), ("11", "00")]);
    for (name, s) in [
        ("iso", iso_fixture(&h, &[1, 2, 3])?),
        ("alternating", alternating_fixture(&h, &[1, 2, 3, 4])?),
    ] {
        println!(
            "{name}: (i) {} (ii) {} (iii) {}",
            condition_i(&s).ok,
            condition_ii(&s).ok,
            condition_iii(&s).ok
        );
        let m = mutate(&s, &mut rng)?;
        let r = condition_ii(&m);
        println!(
            "  mutant: (i) {} (ii) {} (iii) {}; first violation {:?}",
            condition_i(&m).ok,
            r.ok,
            condition_iii(&m).ok,
            r.violation
        );
    }
    Ok(())
}

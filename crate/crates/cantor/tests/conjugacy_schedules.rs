//! Commuting schedules, their three equivalent characterizations, stage
//! homeomorphisms, the conjugator and the back-and-forth constructions.

use cantor::conjugacy::{
    alternating_fixture, asym_commutes_check, back_and_forth_cont, back_and_forth_hom, commutes_check,
    condition_i, condition_ii, condition_iii, conjugator, inverse_schedule, iso_fixture, mutate, nu_closure,
    stage_hom, validate, ConjugacySchedule,
};
use cantor::digraph::{build_gr, Digraph, GraphMap};
use cantor::generic::{generic_cont, generic_hom, QSchedule};
use cantor::{compose, sampling, Clopen, Partition, PrefixMap, Rat};
use proptest::prelude::*;

/// `h f h⁻¹`, the map an iso fixture built from `h` conjugates `f` to.
fn conjugate_by(f: &PrefixMap, h: &PrefixMap) -> PrefixMap {
    compose(&compose(&h.inverse().unwrap(), f).unwrap(), h).unwrap()
}

#[test]
fn single_stage_schedules_commute() {
    let s = iso_fixture(&PrefixMap::swap(), &[2]).unwrap();
    assert!(commutes_check(&s).ok);
    assert!(condition_i(&s).ok && condition_iii(&s).ok);
}

#[test]
fn mutated_fixture_reports_a_violation() {
    let s = iso_fixture(&PrefixMap::swap(), &[1, 2, 3]).unwrap();
    let m = mutate(&s, &mut sampling::rng(1)).unwrap();
    let r = commutes_check(&m);
    assert!(!r.ok);
    let v = r.violation.unwrap();
    assert!(v.n < v.m);
}

#[test]
fn asymptotic_commuting() {
    let h = PrefixMap::lit(&[("00", "10"), ("10", "01"), ("01", "11"), ("11", "00")]);
    let s = iso_fixture(&h, &[1, 2, 3]).unwrap();
    let ones = vec![Rat::recip(1); 3];
    assert!(asym_commutes_check(&s, &ones).unwrap());
    let m = mutate(&s, &mut sampling::rng(3)).unwrap();
    assert!(asym_commutes_check(&m, &ones).unwrap());
    // For a commuting schedule the accumulated images are the stage images.
    let nc = nu_closure(&s).unwrap();
    let meshes: Vec<Rat> = nc.stages.iter().map(|st| st.closure_mesh).collect();
    assert!(meshes.iter().zip(&nc.stages).all(|(m, st)| *m == st.image_mesh));
    assert!(meshes.windows(2).all(|w| w[1] < w[0]));
    assert!(asym_commutes_check(&s, &meshes).unwrap());
    // The inverse family commutes too.
    let inv = inverse_schedule(&s).unwrap();
    assert!(commutes_check(&inv).ok);
    let inv_meshes: Vec<Rat> = nu_closure(&inv).unwrap().stages.iter().map(|st| st.closure_mesh).collect();
    assert!(asym_commutes_check(&inv, &inv_meshes).unwrap());
}

#[test]
fn stage_homeomorphisms() {
    let f = PrefixMap::swap();
    let p = Partition::uniform(2).unwrap();
    let g = build_gr(&f, &p).unwrap();
    let id = GraphMap::new(g.clone(), g, (0..4).collect()).unwrap();
    assert_eq!(stage_hom(&id).unwrap(), PrefixMap::identity());

    // Loop(4) on the depth-2 cells onto Loop(2) on the halves, two to one.
    let loop4 = Digraph::labeled(p.clone(), [(0, 1), (1, 3), (3, 2), (2, 0)]).unwrap();
    let halves = Partition::uniform(1).unwrap();
    let loop2 = Digraph::labeled(halves.clone(), [(0, 1), (1, 0)]).unwrap();
    let nu = GraphMap::new(loop4, loop2, vec![0, 1, 0, 1]).unwrap();
    let h = stage_hom(&nu).unwrap();
    assert!(h.is_homeomorphism());
    for c in 0..2 {
        let over: Vec<&Clopen> = (0..4).filter(|&a| nu.map[a] == c).map(|a| p.cell(a)).collect();
        let images: Vec<Clopen> = over.iter().map(|a| h.image(a).unwrap()).collect();
        assert_eq!(Clopen::union_all(&images), halves.cell(c).clone());
        assert!(!images[0].meets(&images[1]));
    }

    let point = Digraph::labeled(Partition::trivial(), [(0, 0)]).unwrap();
    let two = Digraph::labeled(halves, [(0, 0), (1, 1)]).unwrap();
    let partial = GraphMap::new(point, two, vec![0]).unwrap();
    assert!(stage_hom(&partial).is_err());
}

#[test]
fn conjugator_of_identity_schedule_is_identity() {
    let f = PrefixMap::lit(&[("0", "10"), ("10", "0"), ("11", "11")]);
    let s = iso_fixture(&PrefixMap::identity(), &[1, 2, 3]).unwrap();
    let c = conjugator(&s, &f, &f).unwrap();
    assert_eq!(c.h, PrefixMap::identity());
    assert!(c.stages.iter().all(|r| r.residual.is_zero()));
    let m = mutate(&s, &mut sampling::rng(2)).unwrap();
    assert!(conjugator(&m, &f, &f).is_err());
}

#[test]
fn back_and_forth_between_generic_homeomorphisms() {
    let a = generic_hom(2, 1, QSchedule::Strict).unwrap();
    let same = back_and_forth_hom(&a.h, &a.witnesses, &a.h, &a.witnesses, 2).unwrap();
    assert!(commutes_check(&same).ok);
    let b = generic_hom(2, 2, QSchedule::Strict).unwrap();
    let s = back_and_forth_hom(&a.h, &a.witnesses, &b.h, &b.witnesses, 2).unwrap();
    validate(&s, &a.h, &b.h).unwrap();
    assert!(commutes_check(&s).ok);
    let c = conjugator(&s, &a.h, &b.h).unwrap();
    for r in &c.stages {
        assert!(r.residual <= r.bound, "{r:?}");
    }
    assert!(c.stages.windows(2).all(|w| w[1].residual <= w[0].residual));
    for cb in &c.cauchy {
        assert!(cb.dist <= cb.bound, "{cb:?}");
    }
    assert!(back_and_forth_hom(&a.h, &a.witnesses, &b.h, &b.witnesses, 3).is_err());
}

#[test]
fn back_and_forth_between_generic_continuous_maps() {
    let a = generic_cont(2, 1, QSchedule::Strict).unwrap();
    let b = generic_cont(2, 2, QSchedule::Strict).unwrap();
    let s = back_and_forth_cont(&a.f, &a.witnesses, &b.f, &b.witnesses, 2).unwrap();
    assert!(commutes_check(&s).ok);
    let c = conjugator(&s, &a.f, &b.f).unwrap();
    assert!(c.stages.iter().all(|r| r.residual <= r.bound));
    let same = back_and_forth_cont(&a.f, &a.witnesses, &a.f, &a.witnesses, 1).unwrap();
    assert!(commutes_check(&same).ok);
    assert!(back_and_forth_cont(&a.f, &a.witnesses, &b.f, &b.witnesses, 5).is_err());
}

#[test]
fn schedules_round_trip_through_json() {
    let s = alternating_fixture(&PrefixMap::swap(), &[1, 2, 3]).unwrap();
    let text = serde_json::to_string(&s).unwrap();
    assert_eq!(serde_json::from_str::<ConjugacySchedule>(&text).unwrap(), s);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn characterizations_agree(seed in any::<u64>(), alternating in any::<bool>()) {
        let mut rng = sampling::rng(seed);
        let h = sampling::homeomorphism(&mut rng, 3);
        let depths = [1, 2, 3, 4];
        let s = if alternating {
            alternating_fixture(&h, &depths).unwrap()
        } else {
            iso_fixture(&h, &depths).unwrap()
        };
        let verdicts = [condition_i(&s).ok, condition_ii(&s).ok, condition_iii(&s).ok];
        prop_assert_eq!(verdicts, [true; 3]);
        let m = mutate(&s, &mut rng).unwrap();
        let verdicts = [condition_i(&m).ok, condition_ii(&m).ok, condition_iii(&m).ok];
        prop_assert_eq!(verdicts, [false; 3]);
    }

    #[test]
    fn fixture_conjugators_meet_their_bounds(seed in any::<u64>()) {
        let mut rng = sampling::rng(seed);
        let h = sampling::homeomorphism(&mut rng, 3);
        let f = sampling::homeomorphism(&mut rng, 3);
        let g = conjugate_by(&f, &h);
        let s = iso_fixture(&h, &[1, 2, 3, 4]).unwrap();
        let c = conjugator(&s, &f, &g).unwrap();
        for r in &c.stages {
            prop_assert!(r.residual <= r.bound);
        }
        for cb in &c.cauchy {
            prop_assert!(cb.dist <= cb.bound);
        }
    }
}

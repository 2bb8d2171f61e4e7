//! Generic homeomorphism and generic continuous map witnesses, their
//! checkers, loops, bar increases and regularity tests.

use cantor::approx::realize;
use cantor::digraph::{build_gr, classify_all, Digraph, Shape};
use cantor::generic::{
    attach_loops, attach_loops_certified, check_property_p, check_property_q, cont_nesting, f_admissible,
    factorial, generic_cont, generic_hom, h_regular, hom_nesting, increase_bar, strict_check, ContWitness,
    HomWitness, QSchedule, Side,
};
use cantor::{iterate, sampling, Clopen, Error, Partition, PrefixMap};
use proptest::prelude::*;

fn part(words: &[&str]) -> Partition {
    Partition::new(words.iter().map(|s| Clopen::lit(&[s])).collect()).unwrap()
}

/// Dumbbell(2,1,2) on five cells: u1 → u2 → u1, u2 → v1 → w1 → w2 → w1.
const BELL: [(usize, usize); 6] = [(0, 1), (1, 0), (1, 2), (2, 3), (3, 4), (4, 3)];

fn dumbbell_212() -> (PrefixMap, Partition) {
    let p = part(&["00", "01", "10", "110", "111"]);
    let g = Digraph::labeled(p.clone(), BELL).unwrap();
    (realize(&g).unwrap().f, p)
}

#[test]
fn schedules() {
    assert_eq!(QSchedule::Strict.values(4), vec![2, 4, 12, 48]);
    assert_eq!(QSchedule::Relaxed.values(4), vec![2, 4, 6, 12]);
    assert_eq!(factorial(4), Some(24));
    assert_eq!(factorial(40), None);
}

#[test]
fn one_stage_homeomorphism() {
    let g = generic_hom(1, 3, QSchedule::Strict).unwrap();
    assert!(g.h.is_homeomorphism());
    assert_eq!(g.witnesses.len(), 1);
    assert!(check_property_p(&g.h, &g.witnesses[0], 1).ok);
    assert_eq!(h_regular(&g.h, &g.witnesses[0].p).unwrap(), Some(2));
    assert!(matches!(generic_hom(0, 3, QSchedule::Strict), Err(Error::Invalid(_)) | Err(Error::Precondition(_))));
}

#[test]
fn two_stage_homeomorphism_is_nested() {
    let g = generic_hom(2, 7, QSchedule::Strict).unwrap();
    for (i, w) in g.witnesses.iter().enumerate() {
        let v = check_property_p(&g.h, w, i + 1);
        assert!(v.ok, "stage {}: {:?}", i + 1, v.reason);
    }
    let n = hom_nesting(&g.witnesses);
    assert!(n.refines && n.multiple && n.factorial_ratio, "{:?}", n.reason);
    assert!(g.witnesses[1].p.mesh() < g.witnesses[0].p.mesh());
    // Every loop is a genuine cycle of length q!.
    for w in &g.witnesses {
        let period = factorial(w.q).unwrap() as u64;
        let hq = iterate(&g.h, period).unwrap();
        for lp in &w.loops {
            assert_eq!(hq.image(&lp.a).unwrap(), lp.a);
            assert_eq!(hq.image(&lp.b).unwrap(), lp.b);
        }
    }
}

#[test]
fn strict_three_stages_exceed_the_budget() {
    match generic_hom(3, 7, QSchedule::Strict) {
        Err(Error::Budget { feasible, .. }) => assert_eq!(feasible, 2),
        other => panic!("expected a budget error, got {:?}", other.map(|g| g.witnesses.len())),
    }
}

#[test]
fn generation_is_deterministic() {
    let a = generic_hom(2, 11, QSchedule::Strict).unwrap();
    let b = generic_hom(2, 11, QSchedule::Strict).unwrap();
    assert_eq!(a.h, b.h);
    assert_eq!(a.witnesses, b.witnesses);
    let c = generic_hom(2, 12, QSchedule::Strict).unwrap();
    assert_ne!(a.h, c.h);
}

#[test]
fn checker_rejects_non_dumbbells_and_bad_parameters() {
    let swap = PrefixMap::swap();
    let w = HomWitness { p: Partition::uniform(1).unwrap(), q: 2, loops: vec![] };
    let v = check_property_p(&swap, &w, 1);
    assert!(!v.ok);
    assert!(v.reason.unwrap().contains("Loop(2)"));
    let g = generic_hom(1, 3, QSchedule::Strict).unwrap();
    let mut bad = g.witnesses[0].clone();
    bad.q = 3;
    assert!(!check_property_p(&g.h, &bad, 2).ok);
    assert!(h_regular(&swap, &Partition::uniform(1).unwrap()).unwrap().is_none());
}

#[test]
fn loops_on_a_small_dumbbell() {
    let p = part(&["0", "10", "11"]);
    let gr = Digraph::labeled(p.clone(), [(0, 0), (0, 1), (1, 2), (2, 2)]).unwrap();
    let g = realize(&gr).unwrap().f;
    let (h, loops) = attach_loops_certified(&g, &p).unwrap();
    assert_eq!(build_gr(&h, &p).unwrap(), gr);
    let (class, lp) = &loops[0];
    assert_eq!(class.shape, Shape::Dumbbell(1, 1, 1));
    assert_eq!(h.image(&lp.a).unwrap(), lp.a);
    assert_eq!(h.image(&lp.b).unwrap(), lp.b);
    let w = HomWitness { p, q: 1, loops: loops.into_iter().map(|(_, l)| l).collect() };
    assert!(check_property_p(&h, &w, 1).ok);
    // Attaching loops again keeps the property.
    let again = attach_loops(&h, &w.p).unwrap();
    assert_eq!(h_regular(&again, &w.p).unwrap(), Some(1));
    assert!(attach_loops(&PrefixMap::swap(), &Partition::uniform(1).unwrap()).is_err());
}

#[test]
fn bar_increases() {
    let (h, p) = dumbbell_212();
    for side in [Side::Left, Side::Right] {
        let q = increase_bar(&h, &p, 0, side).unwrap();
        assert!(q.refines(&p));
        let classes = classify_all(&build_gr(&h, &q).unwrap()).unwrap();
        assert_eq!(classes.len(), 1);
        assert_eq!(classes[0].1.shape, Shape::Dumbbell(2, 2, 2));
    }
    // A balloon has no bar to lengthen.
    let bp = part(&["0", "1"]);
    let balloon = realize(&Digraph::labeled(bp.clone(), [(0, 1), (1, 1)]).unwrap()).unwrap().f;
    assert!(increase_bar(&balloon, &bp, 0, Side::Left).is_err());
}

#[test]
fn mixed_plate_weights_are_not_regular() {
    let mut rng = sampling::rng(4);
    let p = sampling::partition_with_cells(&mut rng, 18, 6);
    let mut edges: Vec<(usize, usize)> = BELL.to_vec();
    // Dumbbell(6,1,6) on cells 5..18.
    let u: Vec<usize> = (5..11).collect();
    let w: Vec<usize> = (12..18).collect();
    for i in 0..6 {
        edges.push((u[i], u[(i + 1) % 6]));
        edges.push((w[i], w[(i + 1) % 6]));
    }
    edges.push((u[5], 11));
    edges.push((11, w[0]));
    let gr = Digraph::labeled(p.clone(), edges).unwrap();
    let h = attach_loops(&realize(&gr).unwrap().f, &p).unwrap();
    assert_eq!(h_regular(&h, &p).unwrap(), None);
    let (g, p) = dumbbell_212();
    assert_eq!(h_regular(&attach_loops(&g, &p).unwrap(), &p).unwrap(), Some(2));
}

#[test]
fn continuous_witnesses() {
    let g = generic_cont(1, 5, QSchedule::Strict).unwrap();
    assert!(check_property_q(&g.f, &g.witnesses[0], 1).ok);
    assert_eq!(f_admissible(&g.f, &g.witnesses[0].p).unwrap(), Some(2));
    let g = generic_cont(2, 5, QSchedule::Strict).unwrap();
    assert!(g.witnesses[1].p.refines(&g.witnesses[0].p));
    for (i, w) in g.witnesses.iter().enumerate() {
        assert!(check_property_q(&g.f, w, i + 1).ok);
    }
    let n = cont_nesting(&g.witnesses);
    assert!(n.refines && n.multiple && n.factorial_ratio);
    assert!(generic_cont(0, 5, QSchedule::Strict).is_err());
}

#[test]
fn strictness_examples() {
    let trivial = Partition::trivial();
    assert!(!strict_check(&PrefixMap::identity(), &trivial, 0).unwrap());
    let collapse = PrefixMap::lit(&[("", "00")]);
    assert!(strict_check(&collapse, &trivial, 0).unwrap());
    let w = ContWitness { p: trivial.clone(), q: 1 };
    assert!(!check_property_q(&PrefixMap::identity(), &w, 1).ok);
    // Two balloons of different sizes.
    let p = part(&["0", "10", "11"]);
    let gr = Digraph::labeled(p.clone(), [(0, 0), (1, 2), (2, 1)]).unwrap();
    let f = realize(&gr).unwrap().f;
    assert_eq!(f_admissible(&f, &p).unwrap(), None);
}

#[test]
fn witnesses_round_trip_through_json() {
    let g = generic_hom(2, 2, QSchedule::Strict).unwrap();
    let text = serde_json::to_string(&g.witnesses).unwrap();
    assert_eq!(serde_json::from_str::<Vec<HomWitness>>(&text).unwrap(), g.witnesses);
    let c = generic_cont(2, 2, QSchedule::Strict).unwrap();
    let text = serde_json::to_string(&c.witnesses).unwrap();
    assert_eq!(serde_json::from_str::<Vec<ContWitness>>(&text).unwrap(), c.witnesses);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn every_seed_gives_valid_witnesses(seed in any::<u64>()) {
        let g = generic_hom(2, seed, QSchedule::Strict).unwrap();
        for (i, w) in g.witnesses.iter().enumerate() {
            prop_assert!(check_property_p(&g.h, w, i + 1).ok);
        }
        let c = generic_cont(2, seed, QSchedule::Strict).unwrap();
        for (i, w) in c.witnesses.iter().enumerate() {
            prop_assert!(check_property_q(&c.f, w, i + 1).ok);
        }
    }
}

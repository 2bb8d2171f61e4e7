//! Covering parameters, shape covers, lifts and the approximation contract.

use cantor::approx::{
    approximate, cover_params, edge_params, refine_realize, shapes_onto, Overrides, QPolicy, ShapeKind,
};
use cantor::digraph::{build_gr, check_graph_map, classify_all, Digraph, GraphMap, Shape};
use cantor::{sampling, sup_dist, Partition, PrefixMap, Rat};
use proptest::prelude::*;

fn g(n: usize, e: &[(usize, usize)]) -> Digraph {
    Digraph::new(n, e.iter().copied()).unwrap()
}

#[test]
fn edge_parameter_examples() {
    let complete = g(2, &[(0, 0), (0, 1), (1, 0), (1, 1)]);
    let e = edge_params(&complete, (0, 1), ShapeKind::Balloon).unwrap();
    assert_eq!((e.s, e.m), (1, 1));
    let loop2 = g(2, &[(0, 1), (1, 0)]);
    let e = edge_params(&loop2, (0, 1), ShapeKind::Balloon).unwrap();
    assert_eq!((e.s, e.m), (1, 2));
    let e = edge_params(&loop2, (0, 1), ShapeKind::Dumbbell).unwrap();
    assert_eq!((e.n, e.s, e.m), (Some(2), 1, 2));
}

#[test]
fn cover_parameter_examples() {
    let c = cover_params(&g(1, &[(0, 0)]), ShapeKind::Dumbbell).unwrap();
    assert_eq!((c.k, c.s, c.m, c.n), (1, 1, 1, Some(1)));
    let c = cover_params(&g(2, &[(0, 1), (1, 0)]), ShapeKind::Dumbbell).unwrap();
    assert_eq!((c.k, c.s, c.m, c.n), (2, 1, 2, Some(2)));
    let c = cover_params(&g(2, &[(0, 0), (0, 1), (1, 0), (1, 1)]), ShapeKind::Dumbbell).unwrap();
    assert_eq!((c.k, c.s, c.m, c.n), (4, 1, 1, Some(1)));
}

#[test]
fn shape_cover_examples() {
    let (h, phi) = shapes_onto(&g(1, &[(0, 0)]), ShapeKind::Balloon, 1, 1, 1, None).unwrap();
    assert_eq!(classify_all(&h).unwrap()[0].1.shape, Shape::Balloon(1, 1));
    assert!(check_graph_map(&phi).is_ok() && phi.is_surjective());
    let loop2 = g(2, &[(0, 1), (1, 0)]);
    let (h, phi) = shapes_onto(&loop2, ShapeKind::Balloon, 2, 1, 2, None).unwrap();
    let classes = classify_all(&h).unwrap();
    assert_eq!(classes.len(), 2);
    assert!(classes.iter().all(|(_, c)| c.shape == Shape::Balloon(1, 2)));
    assert!(check_graph_map(&phi).is_ok() && phi.is_surjective());
    let err = shapes_onto(&loop2, ShapeKind::Balloon, 1, 1, 2, None).unwrap_err();
    assert!(err.to_string().contains('2'));
}

#[test]
fn lift_of_swap_to_a_four_cycle() {
    let swap = PrefixMap::swap();
    let q = Partition::uniform(1).unwrap();
    let target = build_gr(&swap, &q).unwrap();
    let loop4 = g(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
    let phi = GraphMap::new(loop4.clone(), target.clone(), vec![0, 1, 0, 1]).unwrap();
    let lift = refine_realize(&swap, &q, &loop4, &phi).unwrap();
    assert_eq!(classify_all(&lift.graph).unwrap()[0].1.shape, Shape::Loop(4));
    assert_eq!(lift.bound, Rat::recip(1));
    assert!(lift.sup_dist <= lift.bound);
    assert_eq!(lift.sup_dist, sup_dist(&swap, &lift.g));

    let partial = GraphMap::new(g(1, &[(0, 0)]), g(2, &[(0, 0), (1, 1)]), vec![0]).unwrap();
    let two_loops = build_gr(&PrefixMap::identity(), &q).unwrap();
    assert!(refine_realize(&PrefixMap::identity(), &q, &g(1, &[(0, 0)]), &partial).is_err());
    let _ = two_loops;
}

#[test]
fn approximation_examples() {
    let ap = approximate(&PrefixMap::swap(), Rat::recip(2), ShapeKind::Dumbbell, Overrides::default()).unwrap();
    assert!(matches!(ap.shape, Shape::Dumbbell(n, _, m) if n == m));
    assert!(ap.lift.sup_dist < Rat::recip(2));
    let ap = approximate(&PrefixMap::identity(), Rat::recip(1), ShapeKind::Balloon, Overrides::default()).unwrap();
    assert!(matches!(ap.shape, Shape::Balloon(..)));
    assert!(approximate(&PrefixMap::swap(), Rat::new(0, 1), ShapeKind::Dumbbell, Overrides::default()).is_err());
    assert!(approximate(&PrefixMap::shift(), Rat::recip(2), ShapeKind::Dumbbell, Overrides::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn dumbbell_approximation_contract(seed in any::<u64>(), e in 1u64..=3) {
        let mut rng = sampling::rng(seed);
        let f = sampling::homeomorphism(&mut rng, 4);
        let eps = Rat::recip(1 << e);
        let ap = approximate(&f, eps, ShapeKind::Dumbbell, Overrides::default()).unwrap();
        prop_assert!(ap.lift.sup_dist < eps);
        prop_assert_eq!(ap.lift.sup_dist, sup_dist(&f, &ap.g));
        prop_assert!(ap.p.mesh() < eps);
        prop_assert!(ap.lift.sup_dist <= ap.lift.bound);
        let classes = classify_all(&build_gr(&ap.g, &ap.p).unwrap()).unwrap();
        prop_assert_eq!(classes.len(), ap.chosen.k);
        prop_assert!(classes.iter().all(|(_, c)| c.shape == ap.shape && c.shape.is_balanced()));
    }

    #[test]
    fn balloon_approximation_contract(seed in any::<u64>(), e in 1u64..=2) {
        let mut rng = sampling::rng(seed);
        let f = sampling::continuous_map(&mut rng, 3);
        let eps = Rat::recip(1 << e);
        let ap = approximate(&f, eps, ShapeKind::Balloon, Overrides::default()).unwrap();
        prop_assert!(ap.lift.sup_dist < eps);
        prop_assert!(ap.p.mesh() < eps);
        prop_assert!(ap.lift.sup_dist <= ap.lift.bound);
        let classes = classify_all(&build_gr(&ap.g, &ap.p).unwrap()).unwrap();
        prop_assert_eq!(classes.len(), ap.chosen.k);
        prop_assert!(classes.iter().all(|(_, c)| c.shape == ap.shape));
    }

    #[test]
    fn halved_policy_meets_the_sum_bound(seed in any::<u64>()) {
        let mut rng = sampling::rng(seed);
        let f = sampling::continuous_map(&mut rng, 3);
        let eps = Rat::recip(2);
        let ov = Overrides { q_policy: QPolicy::Halved, ..Overrides::default() };
        let ap = approximate(&f, eps, ShapeKind::Balloon, ov).unwrap();
        prop_assert!(ap.lift.bound < eps);
        prop_assert!(ap.lift.sup_dist < eps);
    }
}

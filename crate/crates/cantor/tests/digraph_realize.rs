//! Transition digraphs, component classification, graph maps and the
//! realization of digraphs by prefix maps.

use cantor::approx::realize;
use cantor::digraph::{
    build_gr, check_graph_map, classify, classify_all, components, ends, refinement_graph_map, to_dot, Digraph,
    GraphMap, Shape,
};
use cantor::{sampling, Clopen, Partition, PrefixMap};
use proptest::prelude::*;

fn g(n: usize, e: &[(usize, usize)]) -> Digraph {
    Digraph::new(n, e.iter().copied()).unwrap()
}

fn halves() -> Partition {
    Partition::uniform(1).unwrap()
}

#[test]
fn transition_digraphs_of_basic_maps() {
    assert_eq!(build_gr(&PrefixMap::identity(), &halves()).unwrap().edges(), g(2, &[(0, 0), (1, 1)]).edges());
    let swap = build_gr(&PrefixMap::swap(), &halves()).unwrap();
    assert_eq!(classify(&swap.unlabeled()).unwrap().shape, Shape::Loop(2));
    assert_eq!(build_gr(&PrefixMap::shift(), &halves()).unwrap().edge_count(), 4);
}

#[test]
fn components_and_shapes() {
    assert_eq!(components(&g(2, &[(0, 0), (1, 1)])).len(), 2);
    assert_eq!(components(&g(2, &[(0, 1), (1, 0)])).len(), 1);
    // Dumbbell(2,1,2): u1 → u2 → u1, u2 → v1 → w1 → w2 → w1.
    let bell = [(0, 1), (1, 0), (1, 2), (2, 3), (3, 4), (4, 3)];
    let mut three = g(5, &bell);
    three = three.disjoint_union(&g(5, &bell)).disjoint_union(&g(5, &bell));
    let all = classify_all(&three).unwrap();
    assert_eq!(all.len(), 3);
    assert!(all.iter().all(|(_, c)| c.shape == Shape::Dumbbell(2, 1, 2)));
    assert_eq!(classify(&g(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)])).unwrap().shape, Shape::Loop(5));
    assert_eq!(classify(&g(3, &[(0, 1), (1, 2), (2, 2)])).unwrap().shape, Shape::Balloon(2, 1));
    assert_eq!(
        classify(&g(3, &[(0, 0), (0, 1), (1, 2), (2, 2)])).unwrap().shape,
        Shape::Dumbbell(1, 1, 1)
    );
    assert_eq!(classify(&g(2, &[(0, 0), (0, 1), (1, 0), (1, 1)])).unwrap().shape, Shape::Other);
}

#[test]
fn graph_map_examples() {
    let loop2 = g(2, &[(0, 1), (1, 0)]);
    let id = GraphMap::new(loop2.clone(), loop2.clone(), vec![0, 1]).unwrap();
    assert!(check_graph_map(&id).is_ok());
    let point = g(1, &[(0, 0)]);
    let constant = GraphMap::new(loop2.clone(), point, vec![0, 0]).unwrap();
    assert!(check_graph_map(&constant).is_ok());
    let loop3 = g(3, &[(0, 1), (1, 2), (2, 0)]);
    for a in 0..3 {
        for b in 0..3 {
            let phi = GraphMap::new(loop2.clone(), loop3.clone(), vec![a, b]).unwrap();
            let bad = check_graph_map(&phi).unwrap_err();
            assert!(loop2.has_edge(bad.0, bad.1));
        }
    }
}

#[test]
fn refinement_graph_maps() {
    let swap = PrefixMap::swap();
    let fine = Partition::uniform(2).unwrap();
    let same = refinement_graph_map(&swap, &halves(), &halves()).unwrap();
    assert_eq!(same.map, vec![0, 1]);
    let phi = refinement_graph_map(&swap, &fine, &halves()).unwrap();
    assert!(phi.is_surjective());
    assert!(check_graph_map(&phi).is_ok());
    let fine_classes = classify_all(&phi.source).unwrap();
    assert_eq!(fine_classes.len(), 2);
    assert!(fine_classes.iter().all(|(_, c)| c.shape == Shape::Loop(2)));
    assert!(refinement_graph_map(&swap, &halves(), &fine).is_err());
}

#[test]
fn end_sets() {
    assert_eq!(ends(&g(3, &[(0, 1), (1, 2), (2, 0)])), (vec![], vec![]));
    assert_eq!(ends(&g(2, &[(0, 1), (1, 1)])), (vec![0], vec![]));
    assert_eq!(ends(&g(1, &[])), (vec![0], vec![0]));
}

#[test]
fn realization_examples() {
    let loop2 = Digraph::labeled(halves(), [(0, 1), (1, 0)]).unwrap();
    let r = realize(&loop2).unwrap();
    assert_eq!(build_gr(&r.f, &halves()).unwrap(), loop2);
    assert!(r.x.is_empty());

    let edge = Digraph::labeled(halves(), [(0, 1), (1, 1)]).unwrap();
    let r = realize(&edge).unwrap();
    assert_eq!(r.x, Clopen::lit(&["0"]));
    assert_eq!(r.f.image(&Clopen::full()).unwrap(), Clopen::lit(&["1"]));

    let loops = Digraph::labeled(halves(), [(0, 0), (1, 1)]).unwrap();
    let r = realize(&loops).unwrap();
    assert_eq!(r.f.image(&Clopen::lit(&["0"])).unwrap(), Clopen::lit(&["0"]));
    assert_eq!(r.f.image(&Clopen::lit(&["1"])).unwrap(), Clopen::lit(&["1"]));

    let right_end = Digraph::labeled(halves(), [(0, 1)]).unwrap();
    assert!(realize(&right_end).is_err());
}

#[test]
fn dot_export_has_one_cluster_per_component() {
    let f = PrefixMap::swap();
    let dot = to_dot(&build_gr(&f, &Partition::uniform(2).unwrap()).unwrap()).unwrap();
    assert_eq!(dot.matches("subgraph cluster_").count(), 2);
    assert!(dot.starts_with("digraph"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn realization_round_trips(seed in any::<u64>(), n in 1usize..=12) {
        let mut rng = sampling::rng(seed);
        let gr = sampling::labeled_end_free_digraph(&mut rng, n, 5).unwrap();
        let r = realize(&gr).unwrap();
        prop_assert_eq!(build_gr(&r.f, gr.labels().unwrap()).unwrap(), gr.clone());
        // The left-end cells are exactly what the map misses.
        prop_assert_eq!(r.f.range(), r.x.complement());
        prop_assert!(r.f.is_injective());
    }

    #[test]
    fn refinement_maps_are_surjective_graph_maps(seed in any::<u64>()) {
        let mut rng = sampling::rng(seed);
        let f = sampling::continuous_map(&mut rng, 4);
        let coarse = sampling::partition(&mut rng, 3, 6);
        let fine = coarse.common_refinement(&sampling::partition(&mut rng, 4, 10));
        let phi = refinement_graph_map(&f, &fine, &coarse).unwrap();
        prop_assert!(check_graph_map(&phi).is_ok());
        prop_assert!(phi.is_surjective());
    }

    #[test]
    fn components_partition_the_vertices(seed in any::<u64>(), n in 1usize..=12) {
        let mut rng = sampling::rng(seed);
        let gr = sampling::labeled_end_free_digraph(&mut rng, n, 5).unwrap();
        let mut seen: Vec<usize> = components(&gr).into_iter().flat_map(|c| c.vertices).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
    }
}

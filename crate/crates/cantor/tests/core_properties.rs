//! Algebraic invariants of words, clopen sets, points, partitions and prefix
//! maps, plus the fixed examples of the core operations.

use cantor::{
    compose, dist, iterate, mesh, sampling, sim_p, sup_dist, w, Clopen, Partition, Point, PrefixMap, Rat,
};
use proptest::prelude::*;

fn clopen(seed: u64) -> Clopen {
    let mut rng = sampling::rng(seed);
    let words = sampling::complete_antichain(&mut rng, 5, 0.6);
    let keep: Vec<_> = words.into_iter().filter(|_| rand::Rng::gen_bool(&mut rng, 0.5)).collect();
    Clopen::from_words(keep)
}

fn point(seed: u64) -> Point {
    sampling::point(&mut sampling::rng(seed), 8, 4)
}

fn p(s: &str) -> Point {
    s.parse().unwrap()
}

#[test]
fn distance_examples() {
    assert_eq!(dist(&p("(0)"), &p("(0)")), Rat::new(0, 1));
    assert_eq!(dist(&p("(0)"), &p("1(0)")), Rat::recip(1));
    assert_eq!(dist(&p("01(0)"), &p("00(0)")), Rat::recip(2));
}

#[test]
fn diameter_and_mesh_examples() {
    assert_eq!(Clopen::full().diam().unwrap(), Rat::recip(1));
    assert_eq!(Clopen::lit(&["0"]).diam().unwrap(), Rat::recip(2));
    assert_eq!(Clopen::lit(&["01", "10"]).diam().unwrap(), Rat::recip(1));
    let halves = [Clopen::lit(&["0"]), Clopen::lit(&["1"])];
    assert_eq!(mesh(&halves).unwrap(), Rat::recip(2));
    assert_eq!(mesh(&[Clopen::full()]).unwrap(), Rat::recip(1));
    let three = [Clopen::lit(&["00"]), Clopen::lit(&["01"]), Clopen::lit(&["1"])];
    assert_eq!(mesh(&three).unwrap(), Rat::recip(2));
    assert!(Clopen::empty().diam().is_err());
}

#[test]
fn min_gap_examples() {
    let part = |ws: &[&str]| Partition::new(ws.iter().map(|s| Clopen::lit(&[s])).collect()).unwrap();
    assert_eq!(part(&["0", "1"]).min_gap().unwrap(), Rat::recip(1));
    assert_eq!(part(&["00", "01", "1"]).min_gap().unwrap(), Rat::recip(2));
    assert_eq!(part(&["000", "001", "01", "1"]).min_gap().unwrap(), Rat::recip(3));
    assert!(Partition::trivial().min_gap().is_err());
}

#[test]
fn map_examples() {
    let swap = PrefixMap::swap();
    let shift = PrefixMap::shift();
    let id = PrefixMap::identity();
    assert_eq!(swap.apply(&p("(0)")), p("1(0)"));
    assert_eq!(id.apply(&p("0110(10)")), p("0110(10)"));
    assert_eq!(shift.apply(&p("10(1)")), p("0(1)"));
    assert_eq!(swap.image(&Clopen::lit(&["0"])).unwrap(), Clopen::lit(&["1"]));
    assert_eq!(shift.image(&Clopen::lit(&["1"])).unwrap(), Clopen::full());
    assert_eq!(swap.preimage(&Clopen::lit(&["10"])).unwrap(), Clopen::lit(&["00"]));
    assert_eq!(compose(&swap, &swap).unwrap(), id);
    assert_eq!(iterate(&swap, 0).unwrap(), id);
    assert_eq!(iterate(&swap, 3).unwrap(), swap);
    assert_eq!(sup_dist(&swap, &swap), Rat::new(0, 1));
    assert_eq!(sup_dist(&id, &swap), Rat::recip(1));
    let g = PrefixMap::lit(&[("0", "0"), ("10", "11"), ("11", "10")]);
    assert_eq!(sup_dist(&id, &g), Rat::recip(2));
    let halves = Partition::uniform(1).unwrap();
    assert!(sim_p(&swap, &swap, &halves).unwrap());
    assert!(!sim_p(&id, &swap, &halves).unwrap());
    assert!(sim_p(&id, &swap, &Partition::trivial()).unwrap());
}

#[test]
fn points_parse_and_render_canonically() {
    assert_eq!(p("0101(01)").to_string(), "(01)");
    assert_eq!(p("1(11)").to_string(), "(1)");
    assert!("01".parse::<Point>().is_err());
    assert!("0(2)".parse::<Point>().is_err());
}

#[test]
fn words_respect_the_depth_cap() {
    let long = "0".repeat(cantor::D_MAX);
    let word = w(&long);
    assert!(word.child(false).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn clopen_boolean_algebra(a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let (a, b, c) = (clopen(a), clopen(b), clopen(c));
        prop_assert_eq!(a.union(&b), b.union(&a));
        prop_assert_eq!(a.intersect(&b), b.intersect(&a));
        prop_assert_eq!(a.union(&b.intersect(&c)), a.union(&b).intersect(&a.union(&c)));
        prop_assert_eq!(a.union(&b).complement(), a.complement().intersect(&b.complement()));
        prop_assert_eq!(a.complement().complement(), a.clone());
        prop_assert_eq!(a.difference(&b), a.intersect(&b.complement()));
        prop_assert!(a.intersect(&b).is_subset(&a));
        prop_assert_eq!(a.meets(&b), !a.intersect(&b).is_empty());
        prop_assert!(a.union(&a.complement()).is_full());
    }

    #[test]
    fn clopen_canonical_form_is_unique(a in any::<u64>()) {
        let a = clopen(a);
        if let Some(d) = (!a.is_empty()).then(|| a.max_depth() + 1) {
            let words: Vec<_> = a.cylinders().iter().flat_map(|c| c.extensions(d - c.len()).unwrap()).collect();
            prop_assert_eq!(Clopen::from_words(words), a);
        }
    }

    #[test]
    fn membership_matches_set_operations(a in any::<u64>(), b in any::<u64>(), x in any::<u64>()) {
        let (a, b, x) = (clopen(a), clopen(b), point(x));
        prop_assert_eq!(a.union(&b).contains_point(&x), a.contains_point(&x) || b.contains_point(&x));
        prop_assert_eq!(a.intersect(&b).contains_point(&x), a.contains_point(&x) && b.contains_point(&x));
        prop_assert_eq!(a.complement().contains_point(&x), !a.contains_point(&x));
    }

    #[test]
    fn split_gives_strictly_smaller_pieces(seed in any::<u64>(), n in 2usize..9) {
        let a = clopen(seed);
        prop_assume!(!a.is_empty());
        let pieces = a.split(n).unwrap();
        prop_assert_eq!(pieces.len(), n);
        prop_assert_eq!(Clopen::union_all(&pieces), a.clone());
        for (i, x) in pieces.iter().enumerate() {
            prop_assert!(!x.is_empty());
            for y in &pieces[i + 1..] {
                prop_assert!(!x.meets(y));
            }
        }
    }

    #[test]
    fn distance_is_an_ultrametric(x in any::<u64>(), y in any::<u64>(), z in any::<u64>()) {
        let (x, y, z) = (point(x), point(y), point(z));
        prop_assert_eq!(dist(&x, &y), dist(&y, &x));
        prop_assert_eq!(dist(&x, &y).is_zero(), x == y);
        prop_assert!(dist(&x, &z) <= dist(&x, &y).max(dist(&y, &z)));
    }

    #[test]
    fn diameter_bounds_distances(a in any::<u64>(), x in any::<u64>(), y in any::<u64>()) {
        let a = clopen(a);
        prop_assume!(!a.is_empty());
        let mut rng = sampling::rng(x ^ y);
        let x = sampling::point_in(&mut rng, &a, 6, 3);
        let y = sampling::point_in(&mut rng, &a, 6, 3);
        prop_assert!(a.contains_point(&x) && a.contains_point(&y));
        prop_assert!(dist(&x, &y) <= a.diam().unwrap());
    }

    #[test]
    fn partitions_refine_and_locate(s1 in any::<u64>(), s2 in any::<u64>(), x in any::<u64>()) {
        let mut rng = sampling::rng(s1);
        let p = sampling::partition(&mut rng, 5, 12);
        let mut rng = sampling::rng(s2);
        let q = sampling::partition(&mut rng, 5, 12);
        let r = p.common_refinement(&q);
        prop_assert!(r.refines(&p) && r.refines(&q));
        prop_assert!(r.mesh() <= p.mesh().min(q.mesh()));
        let x = point(x);
        prop_assert!(p.cell(p.cell_of_point(&x)).contains_point(&x));
        prop_assert_eq!(Clopen::union_all(p.cells()), Clopen::full());
    }

    #[test]
    fn composition_and_iteration(s in any::<u64>(), x in any::<u64>(), a in 0u64..4, b in 0u64..4) {
        let mut rng = sampling::rng(s);
        let f = sampling::continuous_map(&mut rng, 4);
        let g = sampling::homeomorphism(&mut rng, 4);
        let h = sampling::continuous_map(&mut rng, 3);
        let x = point(x);
        prop_assert_eq!(compose(&f, &g).unwrap().apply(&x), g.apply(&f.apply(&x)));
        prop_assert_eq!(
            compose(&compose(&f, &g).unwrap(), &h).unwrap(),
            compose(&f, &compose(&g, &h).unwrap()).unwrap()
        );
        prop_assert_eq!(iterate(&g, a + b).unwrap(), compose(&iterate(&g, a).unwrap(), &iterate(&g, b).unwrap()).unwrap());
        let inv = g.inverse().unwrap();
        prop_assert_eq!(compose(&g, &inv).unwrap(), PrefixMap::identity());
        prop_assert_eq!(inv.apply(&g.apply(&x)), x);
    }

    #[test]
    fn images_and_preimages(s in any::<u64>(), a in any::<u64>(), x in any::<u64>()) {
        let mut rng = sampling::rng(s);
        let f = sampling::continuous_map(&mut rng, 4);
        let a = clopen(a);
        let x = point(x);
        let img = f.image(&a).unwrap();
        let pre = f.preimage(&a).unwrap();
        prop_assert_eq!(f.preimage(&a.complement()).unwrap(), pre.complement());
        prop_assert_eq!(pre.contains_point(&x), a.contains_point(&f.apply(&x)));
        if a.contains_point(&x) {
            prop_assert!(img.contains_point(&f.apply(&x)));
        }
        prop_assert_eq!(f.image(&pre).unwrap(), a.intersect(&f.range()));
        prop_assert!(a.is_subset(&f.preimage(&img).unwrap()));
    }

    #[test]
    fn sup_dist_dominates_pointwise(s in any::<u64>(), x in any::<u64>()) {
        let mut rng = sampling::rng(s);
        let f = sampling::continuous_map(&mut rng, 4);
        let g = sampling::continuous_map(&mut rng, 4);
        let x = point(x);
        let d = sup_dist(&f, &g);
        prop_assert_eq!(d, sup_dist(&g, &f));
        prop_assert!(dist(&f.apply(&x), &g.apply(&x)) <= d);
    }

    #[test]
    fn json_round_trips(s in any::<u64>()) {
        let mut rng = sampling::rng(s);
        let f = sampling::continuous_map(&mut rng, 5);
        let p = sampling::partition(&mut rng, 5, 10);
        let a = clopen(s);
        let x = point(s);
        let r = Rat::new(s % 7, 1 + s % 11);
        prop_assert_eq!(serde_json::from_str::<PrefixMap>(&serde_json::to_string(&f).unwrap()).unwrap(), f);
        prop_assert_eq!(serde_json::from_str::<Partition>(&serde_json::to_string(&p).unwrap()).unwrap(), p);
        prop_assert_eq!(serde_json::from_str::<Clopen>(&serde_json::to_string(&a).unwrap()).unwrap(), a);
        prop_assert_eq!(serde_json::from_str::<Point>(&serde_json::to_string(&x).unwrap()).unwrap(), x);
        prop_assert_eq!(serde_json::from_str::<Rat>(&serde_json::to_string(&r).unwrap()).unwrap(), r);
    }
}

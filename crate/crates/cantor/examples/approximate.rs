//! Approximating a homeomorphism within ε by a map whose transition digraph
//! is a disjoint union of identical dumbbells (or balloons for continuous
//! maps).

use cantor::approx::{approximate, Overrides, ShapeKind};
use cantor::{sampling, Rat};

fn main() -> cantor::Result<()> {
    let mut rng = sampling::rng(3);
    let f = sampling::homeomorphism(&mut rng, 4);
    println!("f has {} rules of depth ≤ {}", f.rules().len(), f.depth());
    for eps in [Rat::recip(2), Rat::recip(4), Rat::recip(8)] {
        let ap = approximate(&f, eps, ShapeKind::Dumbbell, Overrides::default())?;
        let r = ap.report();
        println!(
            "ε = {eps}: {} components of shape {:?}, sup d(f,g) = {}, mesh(P) = {}, lift bound {}",
            ap.chosen.k, ap.shape, r.sup_dist, r.mesh_p, r.lift_bound
        );
    }
    let c = sampling::continuous_map(&mut rng, 4);
    let ap = approximate(&c, Rat::recip(4), ShapeKind::Balloon, Overrides::default())?;
    println!("continuous map, ε = 1/4: {} balloons of shape {:?}", ap.chosen.k, ap.shape);
    Ok(())
}

//! Every partition-labeled digraph without right ends is the transition
//! digraph of some prefix map: realize a random one and read it back.

use cantor::approx::realize;
use cantor::digraph::build_gr;
use cantor::sampling;

fn main() -> cantor::Result<()> {
    let mut rng = sampling::rng(11);
    for _ in 0..5 {
        let n = 2 + rand::Rng::gen_range(&mut rng, 0..8);
        let g = sampling::labeled_end_free_digraph(&mut rng, n, 5)?;
        let r = realize(&g)?;
        let back = build_gr(&r.f, g.labels().expect("labeled"))?;
        println!(
            "{n} vertices, {} edges, {} rules: round trip exact = {}",
            g.edge_count(),
            r.f.rules().len(),
            back == g
        );
    }
    Ok(())
}

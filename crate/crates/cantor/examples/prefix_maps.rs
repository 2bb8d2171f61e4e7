//! Continuous maps of `2^ℕ` as finite prefix-substitution rule systems.

use cantor::{compose, iterate, sup_dist, Clopen, Point, PrefixMap};

fn main() -> cantor::Result<()> {
    let swap = PrefixMap::swap();
    let shift = PrefixMap::shift();
    // An odometer-like homeomorphism: add one with carry on the first two bits.
    let add = PrefixMap::lit(&[("00", "10"), ("10", "01"), ("01", "11"), ("11", "00")]);
    println!("add is a homeomorphism: {}", add.is_homeomorphism());
    println!("shift is a homeomorphism: {}", shift.is_homeomorphism());

    let x: Point = "(0)".parse()?;
    for n in 0..5 {
        println!("add^{n}(x) = {}", add.iterate(n)?.apply(&x));
    }
    println!("add^4 = identity: {}", add.iterate(4)? == PrefixMap::identity());

    // Images, preimages, composition and inverses are all exact.
    let a = Clopen::lit(&["00"]);
    println!("add(a)      = {:?}", add.image(&a)?);
    println!("add^-1(a)   = {:?}", add.preimage(&a)?);
    println!("shift(a)    = {:?}", shift.image(&a)?);
    let inv = add.inverse()?;
    println!("add then add^-1 = identity: {}", compose(&add, &inv)? == PrefixMap::identity());
    println!("swap∘swap = identity: {}", iterate(&swap, 2)? == PrefixMap::identity());

    // The supremum distance between two maps.
    println!("sup d(add, id)   = {}", sup_dist(&add, &PrefixMap::identity()));
    println!("sup d(swap, id)  = {}", sup_dist(&swap, &PrefixMap::identity()));
    Ok(())
}

//! Words, clopen sets, partitions and the ultrametric on `2^ℕ`.

use cantor::{dist, w, Clopen, Partition, Point};

fn main() -> cantor::Result<()> {
    // Clopen sets are canonical antichains of cylinders.
    let a = Clopen::from_words(vec![w("00"), w("01"), w("110")]);
    let b = Clopen::lit(&["0", "111"]);
    println!("a           = {a:?}");
    println!("b           = {b:?}");
    println!("a ∪ b       = {:?}", a.union(&b));
    println!("a ∩ b       = {:?}", a.intersect(&b));
    println!("complement  = {:?}", a.complement());
    println!("a \\ b       = {:?}", a.difference(&b));
    println!("diam(a)     = {}", a.diam()?);

    // Splitting a clopen set into nonempty clopen pieces.
    let pieces = Clopen::cylinder(w("1")).split(3)?;
    println!("[1] split in 3 = {pieces:?}");

    // Partitions, mesh and the smallest gap between distinct cells.
    let p = Partition::new(vec![Clopen::lit(&["0"]), Clopen::lit(&["10"]), Clopen::lit(&["11"])])?;
    println!("partition   = {p:?}");
    println!("mesh        = {}", p.mesh());
    println!("min gap     = {}", p.min_gap()?);
    let q = Partition::uniform(3)?;
    println!("uniform(3) refines it: {}", q.refines(&p));

    // Eventually periodic points and their exact distances 1/n.
    let x: Point = "01(1)".parse()?;
    let y: Point = "(01)".parse()?;
    println!("d({x}, {y}) = {}", dist(&x, &y));
    println!("{x} lies in cell {}", p.cell_of_point(&x));
    Ok(())
}

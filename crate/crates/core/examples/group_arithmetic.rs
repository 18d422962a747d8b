// Element arithmetic in the groups towers live on.

use cf_workbench::group::{cyclic_shift, ElementOrder, GroupDescriptor, GroupElement};
use num_rational::Rational64;
use serde_json::json;

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    // ℤ ⊕ ℤ(6)
    let g = GroupDescriptor::direct_sum(vec![GroupDescriptor::integers(), GroupDescriptor::cyclic(6)]);
    let a = g.element(vec![2, 5])?;
    let b = g.element(vec![-1, 3])?;
    println!("a + b = {:?}", g.op(&a, &b)?.coords());
    println!("order of (0,4) = {:?}", g.element_order(&g.element(vec![0, 4])?, 100)?);
    assert_eq!(g.element_order(&a, 100)?, ElementOrder::InfiniteWithinBound);

    // ℝ² through the lattice (½ℤ)²: coordinates are stored in mesh units
    let r2 = GroupDescriptor::lattice(2, Rational64::new(1, 2));
    let x = r2.decode(&json!(["3/2", 1]))?;
    println!("(3/2, 1) is stored as {:?} and encodes back to {}", x.coords(), r2.encode(&x));

    // ℤ² ⋊ ℤ(2): the residue rotates the fiber coordinates
    let s = GroupDescriptor::semidirect(GroupDescriptor::trivial(), GroupDescriptor::integers(), 2);
    let flip = GroupElement::new(vec![0, 0, 1]);
    let x = GroupElement::new(vec![1, 0, 0]);
    println!("flip·x = {:?}, x·flip = {:?}", s.op(&flip, &x)?.coords(), s.op(&x, &flip)?.coords());
    println!("shift of [a, b, c] = {:?}", cyclic_shift(3, &["a", "b", "c"])?);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}

// The ⋄ operation and singleton factorizations.

use cf_workbench::diamond::{diamond, factor, generate, is_mult_subsemigroup, MultSet};
use std::collections::BTreeSet;

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let s = |v: &[u64]| v.iter().copied().collect::<BTreeSet<u64>>();
    println!("{{2}}⋄{{3}} = {:?}", diamond(&s(&[2]), &s(&[3])));
    println!("{}", generate(&[2, 3, 5], 100)?);
    println!("{}", generate(&[2, 3, 5], 12)?);
    let capped = MultSet::singleton(7)?.diamond(&generate(&[2, 3], 20)?)?;
    println!("{capped}");
    println!("factor {{2,3,6}} = {:?}", factor(&s(&[2, 3, 6])));
    println!("factor {{2,4,8}} = {:?}", factor(&s(&[2, 4, 8])));
    println!("factor {{2,5}} = {:?}", factor(&s(&[2, 5])));
    println!("{{2,4,8,16}} closed to 16: {}", is_mult_subsemigroup(&s(&[2, 4, 8, 16]), 16));
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}

// The auxiliary towers over `Jᵖ ⋊ ℤ(p)`: every `(CFfin)` factor is exactly 1.

use cf_workbench::constructions::{aux_tower_j, aux_tower_zp, gamma_tower};
use cf_workbench::group::GroupDescriptor;
use cf_workbench::tower::{explicit, element_set, Tower};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    for p in [2, 3] {
        let t = aux_tower_zp(p, 4)?;
        let report = t.validate(&[])?;
        println!("J = ℤ, p = {p}\n{}", report.table());
        assert!(report.passed());
    }
    let t = aux_tower_j(&GroupDescriptor::cyclic_sum(2, 4), 2, 4)?;
    println!("J = ⊕ℤ(2), p = 2\n{}", t.validate(&[])?.table());

    // a tower over ℤ times the aux tower, read over ℤ × ℤ² ⋊ ℤ(2)
    let z = GroupDescriptor::integers();
    let base = Tower::new(
        z.clone(),
        vec![explicit(&z, &[vec![0]])?, explicit(&z, &[vec![0], vec![1], vec![2], vec![3]])?],
        vec![element_set(&z, &[vec![0], vec![2]])?],
    )?;
    let g = gamma_tower(&base, &aux_tower_zp(2, 1)?)?;
    println!("Γ tower: width {}, #F_1 = {}", g.group().width(), g.f(1).count());
    assert!(g.validate(&[])?.passed());
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}

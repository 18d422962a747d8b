// Cylinders, the finite-level Koopman matrix, and rigidity/mixing tables.

use cf_workbench::group::{GroupDescriptor, GroupElement};
use cf_workbench::koopman::{koopman_matrix, mixing_diagnostic, rigidity_diagnostic};
use cf_workbench::rational::fmt_q;
use cf_workbench::tower::{element_set, explicit, Tower};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let z = GroupDescriptor::integers();
    let pts = |v: &[i64]| v.iter().map(|x| vec![*x]).collect::<Vec<_>>();
    let t = Tower::new(
        z.clone(),
        vec![
            explicit(&z, &pts(&[0, 1]))?,
            explicit(&z, &pts(&(0..8).collect::<Vec<_>>()))?,
            explicit(&z, &pts(&(-4..28).collect::<Vec<_>>()))?,
        ],
        vec![element_set(&z, &pts(&[0, 4]))?, element_set(&z, &pts(&[0, 8, 16]))?],
    )?;

    let a = t.cylinder(0, element_set(&z, &pts(&[0]))?)?;
    println!("μ([{{0}}]_0) = {}", fmt_q(&t.cylinder_measure(&a)?));
    let g = GroupElement::new(vec![4]);
    let (moved, defect) = t.act(&g, &t.refine(&a, 2)?)?;
    println!("T_4 [{{0}}]_0 at level 2: {} atoms, {} defect", moved.base_set(&z).len(), defect.base_set(&z).len());

    let m = koopman_matrix(&t, &g, 1)?;
    println!("U(4) on level 1: {} atoms, defect {}, permutation: {}", m.dimension(), m.defect(), m.is_permutation());

    let seq: Vec<GroupElement> = [4, 8, 16, 1].iter().map(|x| GroupElement::new(vec![*x])).collect();
    for r in rigidity_diagnostic(&t, &seq, std::slice::from_ref(&a), 2)? {
        println!("rigidity g={:?}: {}", r.element, fmt_q(&r.value));
    }
    for r in mixing_diagnostic(&t, &seq, &[(a.clone(), a)], 2)? {
        println!("mixing   g={:?}: {}", r.element, fmt_q(&r.value));
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}

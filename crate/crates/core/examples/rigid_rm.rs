// A rigid tower over ℝ², certified level by level.

use cf_workbench::constructions::{rigid_tower_rm, RigidPlan};
use cf_workbench::group::{GroupDescriptor, GroupElement};
use cf_workbench::koopman::rigidity_diagnostic;
use cf_workbench::rational::fmt_q;
use cf_workbench::region::ElementSet;
use num_rational::Rational64;

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let r2 = GroupDescriptor::lattice(2, Rational64::new(1, 2));
    // first coordinates grow fast enough for α_n = 2⁻ⁿ
    let firsts = [2i64, 10, 90, 1530, 50490, 3_281_850, 400_000_000];
    let seq: Vec<GroupElement> =
        firsts.iter().enumerate().map(|(i, g)| GroupElement::new(vec![*g, 1 + i as i64])).collect();
    let built = rigid_tower_rm(&r2, &seq, &RigidPlan::default(), 5)?;
    println!("level  k  h  #C      factor                  < bound   ratio");
    for l in &built.levels {
        println!(
            "{:>5} {:>2} {:>2} {:>4}  {:<24} {:<6}  {}",
            l.level,
            l.k,
            l.h,
            l.c_size,
            fmt_q(&l.factor),
            l.factor_ok,
            fmt_q(&l.ratio)
        );
    }
    assert!(built.certified());

    let t = &built.tower;
    for n in 1..=t.depth() {
        let g = built.rigidity_element(&seq, n);
        let c = t.cylinder(n - 1, ElementSet::singleton(t.group().identity()))?;
        let row = &rigidity_diagnostic(t, &[g], &[c], n)?[0];
        println!("μ(T_g{n} c △ c) = {}", fmt_q(&row.value));
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}

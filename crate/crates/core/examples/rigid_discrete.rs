// Rigid towers on discrete groups from the three kinds of good sequences.

use cf_workbench::constructions::{classify_good, rigid_tower_discrete, RigidPlan};
use cf_workbench::group::{GroupDescriptor, GroupElement};
use cf_workbench::rational::fmt_q;

fn unit_vectors(n: usize) -> Vec<GroupElement> {
    (0..n)
        .map(|k| {
            let mut v = vec![0; n];
            v[k] = 1;
            GroupElement::new(v)
        })
        .collect()
}

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let powers: Vec<GroupElement> = (1..30).map(|n| GroupElement::new(vec![3i64.pow(n)])).collect();
    let mixed = GroupDescriptor::direct_sum((1..=6).map(|k| GroupDescriptor::cyclic(1 << k)).collect());
    let cases = [
        ("ℤ, 3ⁿ", GroupDescriptor::integers(), powers, vec![1]),
        ("⊕ℤ(2ᵏ)", mixed, unit_vectors(6), vec![1, 0, 0, 0, 0, 0]),
        ("ℤ(3)^⊕", GroupDescriptor::cyclic_sum(3, 12), unit_vectors(12), {
            let mut d = vec![0; 12];
            d[0] = 1;
            d
        }),
    ];
    for (name, group, seq, d) in cases {
        let cert = classify_good(&seq, &group, 10_000);
        println!("{name}: {:?}", cert.case);
        let built = rigid_tower_discrete(&seq, &group, &GroupElement::new(d), &RigidPlan::default(), 4, 10_000)?;
        for l in &built.levels {
            println!(
                "  level {} k={} h={} {:?} #C={} ratio={} independent={} factor={}",
                l.level,
                l.k,
                l.h,
                l.kind,
                l.c_size,
                fmt_q(&l.ratio),
                l.independent,
                fmt_q(&l.factor)
            );
        }
        assert!(built.certified());
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}

// Sampling the Poisson suspension of an infinite-type tower and testing it.

use cf_workbench::constructions::{rigid_tower_discrete, RigidPlan};
use cf_workbench::group::{GroupDescriptor, GroupElement};
use cf_workbench::poisson::{suspension_act, verify_independence, verify_poisson_law, verify_rigidity_suspension, Sampler};
use cf_workbench::tower::element_set;

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let z = GroupDescriptor::integers();
    let seq: Vec<GroupElement> = (1..30).map(|n| GroupElement::new(vec![3i64.pow(n)])).collect();
    let built = rigid_tower_discrete(&seq, &z, &GroupElement::new(vec![1]), &RigidPlan::default(), 4, 1000)?;
    let t = &built.tower;
    let sampler = Sampler::new(t, 1, 4, 1.0)?;
    let cfg = sampler.sample(7, 0);
    println!("window mass {}, sample has {} points", sampler.intensity(), cfg.points.len());
    let moved = suspension_act(t, &built.steps[3], &cfg)?;
    println!("after T_g: {} points, {} left the truncation", moved.config.points.len(), moved.defect);

    let a = t.full_cylinder(0)?;
    let b = t.cylinder(1, element_set(&z, &[vec![-1], vec![1]])?)?;
    let law = verify_poisson_law(&sampler, &a, 20_000, None, 11)?;
    println!("P(N_A = 0) = {:.4} (e⁻¹ ≈ 0.3679), TV {:.4}", law.p_zero, law.tv_distance);
    let ind = verify_independence(&sampler, &a, &b, 20_000, 0.02, 11)?;
    println!("cov(N_A, N_B) = {:.4}, p = {:.3}", ind.covariance, ind.p_value);
    let mut elems = built.steps.clone();
    elems.push(GroupElement::new(vec![1000]));
    for r in verify_rigidity_suspension(&sampler, &elems, &[a], 5_000, 11)? {
        println!("P(N_A changes under {:?}) ≈ {:.3}", r.element, r.estimate);
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}

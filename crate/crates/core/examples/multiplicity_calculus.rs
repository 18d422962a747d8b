// Spectral multiplicities of finite unitary representations of ℤ^d.

use cf_workbench::spectral::{
    product_koopman, random_isotypic, random_unitary, tensor_multiplicity_check, FiniteRep, DEFAULT_TOL,
};
use num_rational::Rational64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // homogeneous blocks of multiplicity 2 and 3
    let s = random_isotypic(&mut rng, 1, &[2]);
    let t = random_isotypic(&mut rng, 1, &[3]);
    let p = product_koopman(&s, &t, DEFAULT_TOL)?;
    println!("M(S×T) = {:?}, predicted {:?}, hypothesis {}", p.multiplicity, p.predicted, p.hypothesis());
    let r = random_isotypic(&mut rng, 1, &[5]);
    let q = product_koopman(&p.rep, &r, DEFAULT_TOL)?;
    println!("M(S×T×R) = {:?}", q.multiplicity);

    // strong disjointness fails for ±1/4: (1/4)+(1/4) = (3/4)+(3/4) mod 1
    let u = FiniteRep::diagonal(1, vec![vec![Rational64::new(1, 4)], vec![Rational64::new(3, 4)]])?;
    let c = tensor_multiplicity_check(&u, &u, DEFAULT_TOL)?;
    println!("U⊗U: strongly disjoint {}, M = {:?} (no claim)", c.strongly_disjoint, c.multiplicity);

    // the same spectrum survives a random change of basis
    let w = random_unitary(s.dim(), &mut rng);
    let dense = s.conjugate(&w)?;
    println!("dense conjugate of S: M = {:?}", dense.multiplicity_set(DEFAULT_TOL)?);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}

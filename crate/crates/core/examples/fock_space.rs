// Truncated Fock exponentials `⊕_{n≤N} U^⊙n`.

use cf_workbench::spectral::{fock_dimension, FiniteRep, DEFAULT_TOL};
use num_rational::Rational64;

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let u = FiniteRep::diagonal(
        1,
        [1, 2, 4].iter().map(|k| vec![Rational64::new(*k, 17)]).collect(),
    )?;
    for n in 0..=3 {
        let e = u.exp_truncated(n)?;
        println!("N = {n}: dim {} (expected {}), M = {:?}", e.dim(), fock_dimension(3, n), e.multiplicity_set(DEFAULT_TOL)?);
    }
    let sym2 = u.sym_power(2)?;
    println!("U^⊙2 spectrum: {:?}", sym2.spectrum(DEFAULT_TOL)?);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}

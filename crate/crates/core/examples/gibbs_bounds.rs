//! Trace distance between Gibbs states against its three upper bounds, and
//! rounding onto a coefficient grid.

use hamcert::gibbs::pinsker_gap_states;
use hamcert::hamiltonian::{gibbs, random_hamiltonian, CoefficientLaw, LocalHamiltonian};
use hamcert::net::{build_net, net_covering_check};

fn main() -> hamcert::Result<()> {
    let z = LocalHamiltonian::from_words(1, 1, &[("Z", 1.0)])?;
    let mz = LocalHamiltonian::from_words(1, 1, &[("Z", -1.0)])?;
    let g = pinsker_gap_states(&gibbs(&z, 1.0)?, &gibbs(&mz, 1.0)?)?;
    println!("Z vs -Z at beta = 1: {g:#?}");
    println!("2 tanh(1) = {:.12}", 2.0 * 1f64.tanh());

    println!("\n{:>3} {:>6} {:>10} {:>10} {:>10} {:>10}", "n", "beta", "distance", "rel.ent", "coeff", "moment");
    for seed in 0..6u64 {
        let n = 1 + (seed as usize % 3);
        let k = n.min(2);
        let beta = 0.5 * (seed + 1) as f64;
        let a = random_hamiltonian(n, k, 2 * seed, &CoefficientLaw::Uniform)?;
        let b = random_hamiltonian(n, k, 2 * seed + 1, &CoefficientLaw::Uniform)?;
        let g = pinsker_gap_states(&gibbs(&a, beta)?, &gibbs(&b, beta)?)?;
        println!(
            "{n:>3} {beta:>6.2} {:>10.4} {:>10.4} {:>10.1} {:>10.3}",
            g.lhs, g.relative_entropy, g.coefficient, g.moment
        );
    }

    let support: Vec<_> = ["ZI", "IZ", "XX"].iter().map(|w| w.parse().unwrap()).collect();
    let net = build_net(2, 2, &support, 0.1)?;
    let h = LocalHamiltonian::from_words(2, 2, &[("ZI", 0.33), ("IZ", -0.71), ("XX", 0.05)])?;
    let check = net_covering_check(&h, &net, 1.0)?;
    println!("\nnet of {} members: rounded to {:?}", net.len(), net.coefficients(check.index));
    println!("distance {:.3e} <= covering bound {:.1}", check.distance, check.bound);
    Ok(())
}

//! Hypercontractive moment bound on random 2-local Hamiltonians, and the
//! high-order tail series whose growth with locality limits the analysis.

use hamcert::hamiltonian::{random_hamiltonian, CoefficientLaw};
use hamcert::oracle::{bonami_factor, bonami_tail_partial_sums, schatten_moment};

fn main() -> hamcert::Result<()> {
    let mut worst = f64::INFINITY;
    for seed in 0..200u64 {
        let n = 2 + (seed as usize % 4);
        let h = random_hamiltonian(n, 2, seed, &CoefficientLaw::Uniform)?;
        for l in 3..=8 {
            let ratio = schatten_moment(&h, l)? / (bonami_factor(l, 2) * h.frobenius_norm());
            worst = worst.min(1.0 - ratio);
        }
    }
    println!("200 random 2-local Hamiltonians, l = 3..8: smallest relative slack {worst:.4}");

    let x = (-3.0f64).exp();
    for k in [2, 3, 4] {
        let sums = bonami_tail_partial_sums(k, x, 120);
        let at = |l: usize| sums[l - 3];
        println!(
            "k = {k}: S(10) = {:.3e}  S(40) = {:.3e}  S(80) = {:.3e}  S(120) = {:.3e}",
            at(10),
            at(40),
            at(80),
            at(120)
        );
        if let Some(i) = sums.iter().position(|s| *s > 1e6) {
            println!("        first exceeds 1e6 at L = {}", i + 3);
        }
    }
    Ok(())
}

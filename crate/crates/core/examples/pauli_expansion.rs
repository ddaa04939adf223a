//! Expand a dense operator in the Pauli basis and check Parseval.

use hamcert::hamiltonian::LocalHamiltonian;
use hamcert::pauli::{expand, local_pauli_count};

fn main() -> hamcert::Result<()> {
    let h = LocalHamiltonian::from_words(3, 2, &[("ZZI", 1.0), ("IXX", -0.5), ("YII", 0.25)])?;
    let m = h.to_matrix();
    let coeffs = expand(&m, None)?;
    for (p, c) in coeffs.iter().filter(|(_, c)| c.norm() > 1e-12) {
        println!("{p}  {:+.6}", c.re);
    }
    println!("||H||_F (coefficients) = {:.6}", coeffs.l2_norm());
    println!("||H||_F (matrix)       = {:.6}", h.frobenius_norm());
    println!("||H||_op               = {:.6}", h.operator_norm());
    for n in 1..=5 {
        let count = local_pauli_count(n, 2);
        println!("n = {n}: {count:>4} strings of weight <= 2, bound 100 n^2 = {}", 100 * n * n);
    }
    Ok(())
}

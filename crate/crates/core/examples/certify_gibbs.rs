//! Gibbs-state certification from coefficient estimates, with both states
//! unknown and with a known reference.

use hamcert::gibbs::{certify_gibbs, GibbsCertConfig, Reference};
use hamcert::hamiltonian::{gibbs_matrix, random_hamiltonian, CoefficientLaw, LocalHamiltonian};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hamcert::Result<()> {
    let cfg = GibbsCertConfig::new(2, 2, 0.3, 0.1, 1.0);
    println!(
        "per-coefficient accuracy {:.3e}, FAR threshold {:.3e}, {} samples per state",
        cfg.per_pauli_accuracy(),
        cfg.far_threshold(),
        cfg.samples()?
    );
    let h = random_hamiltonian(2, 2, 5, &CoefficientLaw::Uniform)?;
    let up = LocalHamiltonian::from_words(2, 2, &[("ZI", 1.0), ("IZ", 1.0)])?;
    let down = LocalHamiltonian::from_words(2, 2, &[("ZI", -1.0), ("IZ", -1.0)])?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (label, a, b) in [("equal", &h, &h), ("Z vs -Z", &up, &down)] {
        let (rho, rho0) = (gibbs_matrix(a, 1.0)?, gibbs_matrix(b, 1.0)?);
        for known in [false, true] {
            let reference = if known { Reference::Known(&rho0) } else { Reference::Unknown(&rho0) };
            let mut report = certify_gibbs(&rho, reference, &cfg, &mut rng)?;
            report.attach_oracle(&rho, &rho0)?;
            let o = report.oracle.as_ref().unwrap();
            println!(
                "{label:<8} known={known:<5} -> {:?}  max gap {:.3e} at {}  distance {:.4}  {:?}",
                report.verdict, report.max_gap, report.witness, o.trace_distance, o.promise
            );
        }
    }
    Ok(())
}

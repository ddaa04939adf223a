//! Recomputes every fitted constant from its corpus and prints the ledger.

use hamcert::constants::{calibrated_margins, dynamics_corpus, ledger_table, DYNAMICS_CORPUS_SEED, DYNAMICS_CORPUS_SIZE};
use hamcert::dynamics::{calibrate_trotter_kappa, trotter_corpus, TROTTER_CORPUS_SEED};
use hamcert::hamiltonian::{gibbs, random_hamiltonian, CoefficientLaw};
use hamcert::shadows::shadow_coverage;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hamcert::Result<()> {
    let kappa = calibrate_trotter_kappa(&trotter_corpus(TROTTER_CORPUS_SEED, 30)?, 64.0)?;
    println!("Trotter kappa: {kappa}");

    let margins = calibrated_margins(&dynamics_corpus(DYNAMICS_CORPUS_SEED, DYNAMICS_CORPUS_SIZE)?);
    println!("calibrated profile margins: {margins:#?} holds = {}", margins.holds());

    println!("shadow constant scan (10 Gibbs states x 40 runs, n = 3, k = 2, eps = 0.1, delta = 0.05):");
    for c_s in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let (mut mom, mut mean) = (0, 0);
        for seed in 0..10u64 {
            let rho = gibbs(&random_hamiltonian(3, 2, 100 + seed, &CoefficientLaw::Uniform)?, 1.0)?.rho;
            let run = shadow_coverage(&rho, 2, 0.1, 0.05, c_s, 40, &mut ChaCha8Rng::seed_from_u64(seed))?;
            mom += run.mom_successes(0.1);
            mean += run.mean_successes(0.1);
        }
        println!("  c_s {c_s:<5} median of means {mom}/400  mean {mean}/400");
    }
    println!("\n{}", ledger_table());
    Ok(())
}

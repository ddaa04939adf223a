//! End-to-end certification of a 2-qubit Hamiltonian against a reference,
//! once with a close target and once with a far one.

use hamcert::certifier::{certify, CertConfig, Profile};
use hamcert::dynamics::{NoiseModel, QuerySimulator};
use hamcert::hamiltonian::{random_hamiltonian_with, CoefficientLaw};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hamcert::Result<()> {
    let eps = 0.05;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let h0 = random_hamiltonian_with(2, 2, &mut rng, &CoefficientLaw::FixedNorm { target: 0.5 })?;
    for gap in [0.5 * eps, 14.4 * eps] {
        let dh = random_hamiltonian_with(2, 2, &mut rng, &CoefficientLaw::FixedNorm { target: gap })?;
        let h = h0.plus(&dh)?;
        let c_op = h.operator_norm().max(h0.operator_norm()).ceil().max(1.0);
        let config = CertConfig::new(eps, 0.1, c_op, 2.0, Profile::Calibrated);
        let sim = QuerySimulator::new(&h, NoiseModel::spam_only(0.01))?;
        let mut report = certify(&h0, &sim, &config, &mut rng)?;
        report.attach_oracle(&h, &h0)?;
        println!("||H - H0||_F = {gap:.4}: {:?}", report.verdict);
        for it in &report.iterations {
            println!(
                "  level {:>2}  eps_l {:.4}  t {:>7.3}  steps {:>4}  estimate {:.4}  {:?}",
                it.level, it.eps, it.time, it.trotter_steps, it.estimate.value, it.verdict
            );
        }
        println!(
            "  total evolution time {:.1} (bound {:.1}), {} queries, oracle {:?}",
            report.ledger.total_evolution_time, report.evolution_time_bound, report.ledger.query_count, report.oracle
        );
    }
    Ok(())
}

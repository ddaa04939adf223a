//! Memoryless estimate of |Tr U / 2^n|^2 from stabilizer-state survival
//! experiments on a Trotterized circuit.

use hamcert::dynamics::{trotter_compile, ExperimentLedger, NoiseModel, QuerySimulator};
use hamcert::hamiltonian::LocalHamiltonian;
use hamcert::identity::{enumerated_survival, estimate_identity_sq, two_design_survival, SamplingMode};
use hamcert::oracle::identity_coeff;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hamcert::Result<()> {
    let h = LocalHamiltonian::from_words(2, 2, &[("ZZ", 0.6), ("XI", 0.3)])?;
    let h0 = LocalHamiltonian::from_words(2, 2, &[("ZZ", 0.5)])?;
    let fragment = trotter_compile(&h0, 2.0, 1e-4, 1.0, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for noise in [NoiseModel::NONE, NoiseModel::spam_only(0.01)] {
        let sim = QuerySimulator::new(&h, noise)?;
        let circuit = sim.compile(&fragment)?;
        let exact = identity_coeff(&circuit.unitary).norm_sqr();
        let mut ledger = ExperimentLedger::new();
        let est = estimate_identity_sq(&circuit, 0.05, 0.05, SamplingMode::PerExperiment, 1 << 30, &mut rng, &mut ledger)?;
        println!("noise {noise:?}");
        println!("  exact |u_I|^2          {exact:.5}");
        println!("  two-design survival    {:.5}", two_design_survival(&circuit.unitary));
        println!("  enumerated survival    {:.5}", enumerated_survival(&circuit.unitary)?);
        println!("  estimate               {:.5} from {} experiments", est.value, est.samples_used);
        println!("  evolution time charged {:.1}", ledger.total_evolution_time);
    }
    Ok(())
}

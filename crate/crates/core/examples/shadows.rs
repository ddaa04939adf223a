//! Random Pauli-basis shadows of a 3-qubit Gibbs state: a dataset round trip
//! and the sample budget's coverage against exact coefficients.

use hamcert::hamiltonian::{gibbs, random_hamiltonian, CoefficientLaw};
use hamcert::shadows::{
    batch_count, collect_shadows, read_dataset, shadow_budget, shadow_coverage, write_dataset, Combine,
    ShadowEstimates, ShadowTable, SHADOW_CONSTANT,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hamcert::Result<()> {
    let (n, k, eps, delta) = (3, 2, 0.1, 0.05);
    let h = random_hamiltonian(n, k, 7, &CoefficientLaw::Uniform)?;
    let rho = gibbs(&h, 1.0)?.rho;
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let samples = collect_shadows(&rho, 2000, &mut rng)?;
    let text = write_dataset(n, &samples);
    println!("{}", text.lines().take(4).collect::<Vec<_>>().join("\n"));
    let (_, back) = read_dataset(&text)?;
    let small = ShadowTable::from_samples(n, &back, 10)?.estimate_all(k, Combine::MedianOfMeans)?;
    let exact = ShadowEstimates::exact(&rho, k)?;
    println!("2000 samples: max error {:.3}", small.max_gap(&exact));

    let m = shadow_budget(n, k, eps, delta)?;
    println!("budget at eps {eps}, delta {delta}: {m} samples in {} batches (c_s = {SHADOW_CONSTANT})", batch_count(n, k, delta));
    let run = shadow_coverage(&rho, k, eps, delta, SHADOW_CONSTANT, 40, &mut rng)?;
    println!(
        "coverage over 40 runs: median of means {}/40, plain mean {}/40",
        run.mom_successes(eps),
        run.mean_successes(eps)
    );
    Ok(())
}

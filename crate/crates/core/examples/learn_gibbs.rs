//! Learn a 2-qubit Gibbs state by scanning a restricted coefficient net.

use hamcert::gibbs::{learn_gibbs, GibbsLearnConfig, NetStates};
use hamcert::hamiltonian::{gibbs_matrix, LocalHamiltonian};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hamcert::Result<()> {
    let cfg = GibbsLearnConfig::new(2, 2, 0.3, 0.1, 1.0).with_eta(0.1);
    let support: Vec<_> = ["ZI", "IZ", "XX"].iter().map(|w| w.parse().unwrap()).collect();
    let net = cfg.build_net(&support)?;
    let states = NetStates::new(&net, cfg.beta)?;
    println!("net: {} members, covering spacing for this eps would be {:.2e}", net.len(), cfg.covering_eta());
    println!("samples per run: {}", cfg.samples()?);

    let truth = LocalHamiltonian::from_words(2, 2, &[("ZI", 0.43), ("IZ", -0.8), ("XX", 0.27)])?;
    let rho = gibbs_matrix(&truth, cfg.beta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut out = learn_gibbs(&rho, &net, &states, &cfg, &mut rng)?;
    out.attach_oracle(&truth, &net, &states)?;
    println!("learned coefficients {:?} (objective {:.4})", out.report.coefficients, out.report.objective);
    println!("oracle: {:#?}", out.report.oracle);
    Ok(())
}

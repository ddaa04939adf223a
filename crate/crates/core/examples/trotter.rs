//! Trotterized difference evolution: step counts, measured error, and the
//! shipped step multiplier recovered from its corpus.

use hamcert::dynamics::{calibrate_trotter_kappa, trotter_corpus, trotter_steps, TROTTER_CORPUS_SEED, TROTTER_KAPPA};

fn main() -> hamcert::Result<()> {
    let cases = trotter_corpus(TROTTER_CORPUS_SEED, 12)?;
    println!("{:>2} {:>6} {:>8} {:>8} {:>10} {:>10}", "n", "t", "eps", "steps", "error", "margin");
    for c in &cases {
        let steps = trotter_steps(c.norm_bound(), c.t, c.eps, TROTTER_KAPPA)?;
        let err = c.error(TROTTER_KAPPA)?;
        println!(
            "{:>2} {:>6.3} {:>8.0e} {:>8} {:>10.3e} {:>10.2}",
            c.h.num_qubits(),
            c.t,
            c.eps,
            steps,
            err,
            c.eps / err
        );
    }
    let kappa = calibrate_trotter_kappa(&cases, 64.0)?;
    println!("smallest kappa meeting every target: {kappa} (shipped {TROTTER_KAPPA})");
    Ok(())
}

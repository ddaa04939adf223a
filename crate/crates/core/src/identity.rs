//! Memoryless estimation of `|Tr[U] / 2^n|^2` from single applications of a
//! unitary: prepare a uniformly random stabilizer state, apply `U` once, and
//! check whether the state survived by measuring in its own stabilizer basis.
//!
//! Stabilizer states form a 2-design, so the survival probability is
//! `(|Tr U|^2 + d) / (d (d + 1))` and an affine map recovers `|u_I|^2`.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::dynamics::{CompiledCircuit, ExperimentLedger, ExperimentPlan, InitialState, MeasurementBasis, UnitaryFragment};
use crate::error::{invalid, Error, Result};
use crate::linalg::DenseOperator;
use crate::stabilizer::{enumerate_stabilizer_states, sample_stabilizer_state, StabilizerState};

/// Hoeffding constant in the experiment count; absorbs the estimator's
/// `(1 + 2^-n) <= 2` range rescaling.
pub const IDENTITY_HOEFFDING: f64 = 8.0;

/// Default cap on experiments per estimate in per-experiment mode.
pub const DEFAULT_EXPERIMENT_BUDGET: u64 = 100_000_000;

/// `ceil(8 ln(2/delta) / eps^2)`.
pub fn experiments_needed(eps: f64, delta: f64) -> Result<u64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(invalid(format!("accuracy {eps} must lie in (0, 1]")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("failure probability {delta} must lie in (0, 1)")));
    }
    let m = (IDENTITY_HOEFFDING * (2.0 / delta).ln() / (eps * eps)).ceil();
    if m >= u64::MAX as f64 {
        return Err(Error::Budget { what: "identity-estimator experiments", needed: m, budget: u64::MAX as f64 });
    }
    Ok(m as u64)
}

/// How the survival indicators are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// One simulated experiment per indicator.
    PerExperiment,
    /// The number of survivals drawn directly from its exact binomial law.
    /// Each indicator is an independent Bernoulli variable with the
    /// stabilizer-averaged survival probability, so the count has the same
    /// distribution as in per-experiment mode; used where the experiment
    /// count is too large to simulate one by one.
    Aggregated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityEstimate {
    /// Debiased estimate clamped to `[0, 1]`.
    pub value: f64,
    /// Debiased estimate before clamping.
    pub raw: f64,
    pub survivals: u64,
    pub samples_used: u64,
    pub eps: f64,
    pub delta: f64,
}

/// `(1 + 2^-n) mean - 2^-n`.
pub fn debias(mean: f64, n: usize) -> f64 {
    let inv_d = 1.0 / (1u64 << n) as f64;
    (1.0 + inv_d) * mean - inv_d
}

/// Survival probability averaged over the 2-design: `(|Tr U|^2 + d) / (d (d + 1))`.
pub fn two_design_survival(u: &DenseOperator) -> f64 {
    let d = u.nrows() as f64;
    (u.trace().norm_sqr() + d) / (d * (d + 1.0))
}

/// Survival probability averaged over every stabilizer state, by enumeration.
pub fn enumerated_survival(u: &DenseOperator) -> Result<f64> {
    let n = crate::linalg::qubits_for_dimension(u.nrows())?;
    let states = enumerate_stabilizer_states(n)?;
    let total: f64 = states
        .iter()
        .map(|s| {
            let v = s.state_vector();
            v.dotc(&(u * &v)).norm_sqr()
        })
        .sum();
    Ok(total / states.len() as f64)
}

/// The experiment for one indicator: prepare `state`, apply the fragment
/// once, measure in the stabilizer basis of `state`. No ancillas.
pub fn build_experiment(n: usize, fragment: &UnitaryFragment, state: &StabilizerState) -> ExperimentPlan {
    ExperimentPlan::from_fragment(
        n,
        InitialState::Stabilizer { state: state.clone() },
        fragment.clone(),
        MeasurementBasis::Stabilizer { state: state.clone() },
    )
}

/// Estimates `|u_I|^2` of the compiled circuit to accuracy `eps` with
/// confidence `1 - delta`, charging every experiment to `ledger`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_identity_sq<R: Rng + ?Sized>(
    circuit: &CompiledCircuit,
    eps: f64,
    delta: f64,
    mode: SamplingMode,
    budget: u64,
    rng: &mut R,
    ledger: &mut ExperimentLedger,
) -> Result<IdentityEstimate> {
    let n = circuit.n;
    let m = experiments_needed(eps, delta)?;
    let survivals = match mode {
        SamplingMode::PerExperiment => {
            if m > budget {
                return Err(Error::Budget { what: "identity-estimator experiments", needed: m as f64, budget: budget as f64 });
            }
            let mut hits = 0u64;
            for _ in 0..m {
                let state = sample_stabilizer_state(n, rng)?;
                let basis = MeasurementBasis::Stabilizer { state: state.clone() };
                if circuit.execute(&InitialState::Stabilizer { state }, &basis, rng, ledger)? == 0 {
                    hits += 1;
                }
            }
            hits
        }
        SamplingMode::Aggregated => {
            let d = (1u64 << n) as f64;
            let p = circuit.survival * two_design_survival(&circuit.unitary) + (1.0 - circuit.survival) / d;
            ledger.charge(&circuit.cost, m);
            Binomial::new(m, p.clamp(0.0, 1.0))
                .map_err(|e| invalid(format!("binomial law: {e}")))?
                .sample(rng)
        }
    };
    let raw = debias(survivals as f64 / m as f64, n);
    Ok(IdentityEstimate { value: raw.clamp(0.0, 1.0), raw, survivals, samples_used: m, eps, delta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{FixedGate, NoiseModel, QuerySimulator, Step};
    use crate::hamiltonian::PauliSum;
    use crate::linalg::{identity, MatrixData};
    use crate::oracle::{identity_coeff, Propagator};
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_unitary(d: usize, rng: &mut ChaCha8Rng) -> DenseOperator {
        let a = DMatrix::from_fn(d, d, |_, _| Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)));
        let h = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
        Propagator::from_matrix(&h).at(1.0)
    }

    fn dense_circuit(u: &DenseOperator, noise: NoiseModel) -> CompiledCircuit {
        let n = crate::linalg::qubits_for_dimension(u.nrows()).unwrap();
        let frag = UnitaryFragment {
            gates: vec![FixedGate::Dense { matrix: MatrixData::from(u) }],
            steps: vec![Step::Fixed { gate: 0 }],
        };
        QuerySimulator::new(&PauliSum::zero(n).unwrap(), noise).unwrap().compile(&frag).unwrap()
    }

    #[test]
    fn experiment_count_formula() {
        assert_eq!(experiments_needed(0.05, 0.05).unwrap(), (8.0 * 40f64.ln() / 0.0025).ceil() as u64);
        assert!(experiments_needed(0.0, 0.1).is_err());
        assert!(experiments_needed(0.1, 1.0).is_err());
    }

    #[test]
    fn identity_unitary_estimates_exactly_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=3 {
            let c = dense_circuit(&identity(1 << n), NoiseModel::NONE);
            let mut ledger = ExperimentLedger::new();
            let e = estimate_identity_sq(&c, 0.2, 0.1, SamplingMode::PerExperiment, u64::MAX, &mut rng, &mut ledger).unwrap();
            assert_eq!(e.value, 1.0);
            assert_eq!(e.survivals, e.samples_used);
            assert_eq!(ledger.experiment_count, e.samples_used);
        }
    }

    #[test]
    fn pauli_x_and_phase_examples() {
        let x = "X".parse::<crate::pauli::PauliString>().unwrap().to_matrix();
        let mean = enumerated_survival(&x).unwrap();
        assert!((mean - 1.0 / 3.0).abs() < 1e-12);
        assert!(debias(mean, 1).abs() < 1e-12);
        for theta in [0.2, 0.9, 1.7] {
            let u = DenseOperator::from_diagonal(&nalgebra::DVector::from_vec(vec![
                Complex64::from_polar(1.0, -theta),
                Complex64::from_polar(1.0, theta),
            ]));
            let mean = enumerated_survival(&u).unwrap();
            assert!((mean - (2.0 + 4.0 * theta.cos().powi(2)) / 6.0).abs() < 1e-12);
            assert!((debias(mean, 1) - theta.cos().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn enumeration_matches_two_design_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..=3 {
            for _ in 0..20 {
                let u = random_unitary(1 << n, &mut rng);
                let exact = enumerated_survival(&u).unwrap();
                assert!((exact - two_design_survival(&u)).abs() < 1e-10);
                assert!((debias(exact, n) - identity_coeff(&u).norm_sqr()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn experiments_are_memoryless_single_query() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h0 = PauliSum::from_terms(2, [("ZZ".parse().unwrap(), 0.3)]).unwrap();
        let frag = crate::dynamics::trotter_compile(&h0, 0.4, 1e-3, 1.0, 1.0).unwrap();
        for _ in 0..10 {
            let s = sample_stabilizer_state(2, &mut rng).unwrap();
            let plan = build_experiment(2, &frag, &s);
            assert_eq!(plan.n, 2);
            assert_eq!(plan.steps, frag.steps);
            assert_eq!(plan.gates, frag.gates);
            assert_eq!(plan.initial, InitialState::Stabilizer { state: s.clone() });
            assert_eq!(plan.measurement, MeasurementBasis::Stabilizer { state: s });
            plan.validate().unwrap();
        }
    }

    #[test]
    fn sampled_estimates_concentrate() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (eps, delta) = (0.1, 0.05);
        let mut misses = 0;
        let runs = 40;
        for r in 0..runs {
            let n = 1 + r % 2;
            let u = random_unitary(1 << n, &mut rng);
            let truth = identity_coeff(&u).norm_sqr();
            let c = dense_circuit(&u, NoiseModel::NONE);
            let mut ledger = ExperimentLedger::new();
            let e = estimate_identity_sq(&c, eps, delta, SamplingMode::PerExperiment, u64::MAX, &mut rng, &mut ledger).unwrap();
            if (e.value - truth).abs() > eps {
                misses += 1;
            }
        }
        assert!(misses <= 2, "{misses} misses");
    }

    #[test]
    fn aggregated_mode_has_the_same_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_unitary(4, &mut rng);
        let truth = identity_coeff(&u).norm_sqr();
        let c = dense_circuit(&u, NoiseModel::NONE);
        let mut ledger = ExperimentLedger::new();
        let e = estimate_identity_sq(&c, 1e-4, 0.01, SamplingMode::Aggregated, 0, &mut rng, &mut ledger).unwrap();
        assert!((e.value - truth).abs() < 1e-4);
        assert_eq!(ledger.experiment_count, e.samples_used);
        assert!(matches!(
            estimate_identity_sq(&c, 1e-4, 0.01, SamplingMode::PerExperiment, 1000, &mut rng, &mut ledger),
            Err(Error::Budget { .. })
        ));
    }

    #[test]
    fn spam_at_a_third_of_the_accuracy_is_tolerated() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let eps = 0.1;
        for n in 1..=2 {
            for _ in 0..10 {
                let u = random_unitary(1 << n, &mut rng);
                let truth = identity_coeff(&u).norm_sqr();
                let c = dense_circuit(&u, NoiseModel::spam_only(eps / 3.0));
                // Exact bias of the noisy estimator.
                let d = (1 << n) as f64;
                let mean = c.survival * enumerated_survival(&u).unwrap() + (1.0 - c.survival) / d;
                assert!((debias(mean, n) - truth).abs() <= eps / 3.0);
                let mut ledger = ExperimentLedger::new();
                let e = estimate_identity_sq(&c, eps, 0.05, SamplingMode::PerExperiment, u64::MAX, &mut rng, &mut ledger).unwrap();
                assert!((e.value - truth).abs() <= eps);
            }
        }
    }
}

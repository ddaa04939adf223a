//! Every numeric constant the protocols ship, with where it comes from, and
//! the corpus used to fit the calibrated certification profile.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certifier::{
    SubroutineConstants, CALIBRATED_TIME_DIVISOR, FAR_FACTOR, PROMISE_FACTOR, SCHEDULE_RATIO,
};
use crate::dynamics::{MAX_TROTTER_STEPS, TROTTER_CORPUS_SEED, TROTTER_KAPPA};
use crate::error::Result;
use crate::gibbs::DEFAULT_SAMPLE_BUDGET;
use crate::hamiltonian::{random_hamiltonian_with, CoefficientLaw};
use crate::identity::{DEFAULT_EXPERIMENT_BUDGET, IDENTITY_HOEFFDING};
use crate::net::DEFAULT_NET_BUDGET;
use crate::oracle::{evolve, identity_coeff};
use crate::shadows::SHADOW_CONSTANT;

pub const CLOSED_FORM_CERT: &str = "closed form (certification subroutine)";
pub const CLOSED_FORM_LOOP: &str = "closed form (certification schedule)";
pub const CLOSED_FORM_IDENTITY: &str = "closed form (identity estimator)";
pub const CLOSED_FORM_GIBBS_LEARN: &str = "closed form (Gibbs learning)";
pub const CLOSED_FORM_GIBBS_CERT: &str = "closed form (Gibbs certification)";
pub const CLOSED_FORM_COUNTING: &str = "closed form (local Pauli counting)";
pub const CORPUS_V1: &str = "calibration corpus v1";
pub const RESOURCE_LIMIT: &str = "resource limit";
pub const ESTIMATOR_CHOICE: &str = "estimator choice";

/// Seed of the dynamics calibration corpus.
pub const DYNAMICS_CORPUS_SEED: u64 = 0xD1CE;
pub const DYNAMICS_CORPUS_SIZE: usize = 300;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub name: String,
    pub value: f64,
    pub formula: String,
    pub provenance: String,
}

fn entry(name: &'static str, value: f64, formula: &'static str, provenance: &str) -> LedgerEntry {
    LedgerEntry { name: name.to_string(), value, formula: formula.to_string(), provenance: provenance.to_string() }
}

pub fn constants_ledger() -> Vec<LedgerEntry> {
    let a = SubroutineConstants::analytic();
    let c = SubroutineConstants::calibrated();
    let corpus_trotter = format!("{CORPUS_V1} (Trotter, seed {TROTTER_CORPUS_SEED:#x})");
    let corpus_dyn = format!("{CORPUS_V1} (dynamics, seed {DYNAMICS_CORPUS_SEED:#x})");
    let corpus_shadow = format!("{CORPUS_V1} (shadows, random 3-qubit Gibbs states)");
    vec![
        entry("C", a.c, "1/(1-e^-2)", CLOSED_FORM_CERT),
        entry("analytic.unit", a.analytic_unit(), "1/(2400 e^6 C^2)", CLOSED_FORM_CERT),
        entry("analytic.t_eps", a.time_factor, "t(eps) * eps = 1/(60 e^3 C)", CLOSED_FORM_CERT),
        entry("analytic.eps_trott", a.eps_trott, "unit/8", CLOSED_FORM_CERT),
        entry("analytic.est_accuracy", a.est_accuracy, "unit/2", CLOSED_FORM_CERT),
        entry("analytic.spam_budget", a.spam_budget, "unit/4", CLOSED_FORM_CERT),
        entry("analytic.far_threshold", a.far_threshold, "1 - 23/(2400 e^6 C^2)", CLOSED_FORM_CERT),
        entry("calibrated.c_t", CALIBRATED_TIME_DIVISOR, "t(eps) = 1/(c_t eps)", &corpus_dyn),
        entry("calibrated.far_threshold", c.far_threshold, "fitted", &corpus_dyn),
        entry("calibrated.est_accuracy", c.est_accuracy, "fitted", &corpus_dyn),
        entry("calibrated.eps_trott", c.eps_trott, "fitted", &corpus_dyn),
        entry("calibrated.spam_budget", c.spam_budget, "fitted", &corpus_dyn),
        entry("schedule.ratio", SCHEDULE_RATIO, "15/12", CLOSED_FORM_LOOP),
        entry("schedule.far_factor", FAR_FACTOR, "far iff ||dH||_F >= 12 eps", CLOSED_FORM_LOOP),
        entry("schedule.promise_factor", PROMISE_FACTOR, "single scale sound for ||dH||_F <= 15 eps", CLOSED_FORM_LOOP),
        entry("identity.hoeffding", IDENTITY_HOEFFDING, "m = ceil(8 ln(2/delta)/eps^2)", CLOSED_FORM_IDENTITY),
        entry("trotter.kappa", TROTTER_KAPPA, "l = ceil(kappa sqrt((c t)^3/eps))", &corpus_trotter),
        entry("shadows.c_s", SHADOW_CONSTANT, "m = ceil(c_s 3^k k ln(100 n^k/delta)/eps^2)", &corpus_shadow),
        entry("shadows.batch_factor", 2.0, "B = 2 ceil(ln(2 * 100 n^k/delta))", ESTIMATOR_CHOICE),
        entry("pauli.count_bound", 100.0, "#{P : |P| <= k} <= 100 n^k", CLOSED_FORM_COUNTING),
        entry("gibbs_learn.net_radius", 100.0, "eps' = eps^2/(100 max(beta,1) n^k)", CLOSED_FORM_GIBBS_LEARN),
        entry("gibbs_learn.per_pauli", 200.0, "eps~/(200 n^k)", CLOSED_FORM_GIBBS_LEARN),
        entry("gibbs_learn.chain", 3.0, "objective at rounded truth <= 3 eps^2/max(beta,1)", CLOSED_FORM_GIBBS_LEARN),
        entry("gibbs_cert.per_pauli", 800.0, "eps^2/(800 beta n^k)", CLOSED_FORM_GIBBS_CERT),
        entry("gibbs_cert.far_threshold", 3.0 / 400.0, "3 eps^2/(400 beta n^k)", CLOSED_FORM_GIBBS_CERT),
        entry("gibbs_cert.close_promise", 1.0 / 400.0, "eps^2/(400 beta n^k)", CLOSED_FORM_GIBBS_CERT),
        entry("gibbs_cert.far_promise", 2.0, "2 eps", CLOSED_FORM_GIBBS_CERT),
        entry("budget.experiments", DEFAULT_EXPERIMENT_BUDGET as f64, "per identity estimate", RESOURCE_LIMIT),
        entry("budget.trotter_steps", MAX_TROTTER_STEPS as f64, "per compiled fragment", RESOURCE_LIMIT),
        entry("budget.net_members", DEFAULT_NET_BUDGET as f64, "per restricted net", RESOURCE_LIMIT),
        entry("budget.shadow_samples", DEFAULT_SAMPLE_BUDGET as f64, "per Gibbs state", RESOURCE_LIMIT),
    ]
}

pub fn ledger_table() -> String {
    let rows = constants_ledger();
    let w = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut s = String::new();
    for r in &rows {
        writeln!(s, "{:<w$}  {:<24}  {:<48}  {}", r.name, format!("{:.16e}", r.value), r.formula, r.provenance).unwrap();
    }
    s
}

/// One random difference Hamiltonian at the far edge of a single scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsCase {
    pub n: usize,
    /// `t ||Delta H||_F`, in `[1, 15/12]`.
    pub scaled_norm: f64,
    /// `1 - |Tr exp(-it Delta H)/2^n|^2`.
    pub deficit: f64,
}

/// Random 2-local differences on 1 to 3 qubits whose normalized Frobenius
/// norm sits between the far edge `12 eps` and the promise edge `15 eps`,
/// evolved for the calibrated time `1/(12 eps)`.
pub fn dynamics_corpus(seed: u64, size: usize) -> Result<Vec<DynamicsCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size)
        .map(|i| {
            let n = 1 + i % 3;
            let x = rng.random_range(FAR_FACTOR..=PROMISE_FACTOR) / CALIBRATED_TIME_DIVISOR;
            let h = random_hamiltonian_with(n, n.min(2), &mut rng, &CoefficientLaw::FixedNorm { target: x })?;
            let deficit = 1.0 - identity_coeff(&evolve(&h, 1.0)).norm_sqr();
            Ok(DynamicsCase { n, scaled_norm: x, deficit })
        })
        .collect()
}

/// Margins of the calibrated single-scale test on the corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationMargins {
    /// Smallest deficit over far cases, and the deficit a FAR verdict needs.
    pub far_min_deficit: f64,
    pub far_required: f64,
    /// Largest deficit under the close promise, `(1/c_t)^2`, plus all error
    /// terms, against the room left below the threshold.
    pub close_budget: f64,
    pub close_allowed: f64,
}

impl CalibrationMargins {
    pub fn holds(&self) -> bool {
        self.far_min_deficit >= self.far_required && self.close_budget <= self.close_allowed
    }
}

pub fn calibrated_margins(cases: &[DynamicsCase]) -> CalibrationMargins {
    let c = SubroutineConstants::calibrated();
    let noise = c.est_accuracy + 2.0 * c.eps_trott + c.spam_budget;
    CalibrationMargins {
        far_min_deficit: cases.iter().map(|d| d.deficit).fold(f64::INFINITY, f64::min),
        far_required: 1.0 - c.far_threshold + noise,
        close_budget: CALIBRATED_TIME_DIVISOR.powi(-2) + noise,
        close_allowed: 1.0 - c.far_threshold,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;
    use std::f64::consts::E;

    #[test]
    fn every_constant_appears_once() {
        let rows = constants_ledger();
        let names: BTreeSet<_> = rows.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names.len(), rows.len());
        assert!(rows.iter().all(|r| r.value.is_finite() && r.value > 0.0));
        assert_eq!(ledger_table().lines().count(), rows.len());
    }

    #[test]
    fn analytic_entries_match_closed_forms() {
        let rows = constants_ledger();
        let get = |n: &str| rows.iter().find(|r| r.name == n).unwrap();
        let c = 1.0 / (1.0 - (-2.0f64).exp());
        assert_eq!(get("C").value, c);
        assert_eq!(get("C").provenance, CLOSED_FORM_CERT);
        let unit = 1.0 / (2400.0 * E.powi(6) * c * c);
        assert!((get("analytic.far_threshold").value - (1.0 - 23.0 * unit)).abs() < 1e-15);
        assert!(get("trotter.kappa").provenance.starts_with(CORPUS_V1));
        assert!(get("shadows.c_s").provenance.starts_with(CORPUS_V1));
    }

    #[test]
    fn calibrated_profile_has_margin_on_corpus() {
        let cases = dynamics_corpus(DYNAMICS_CORPUS_SEED, DYNAMICS_CORPUS_SIZE).unwrap();
        let m = calibrated_margins(&cases);
        assert!(m.holds(), "{m:?}");
    }

    /// Deficits grow with the scaled norm in the small-norm regime, so the
    /// far edge `x = 1` is the binding case.
    #[test]
    fn deficit_is_monotone_in_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let n = rng.random_range(1..=3);
            let h = random_hamiltonian_with(n, n.min(2), &mut rng, &CoefficientLaw::FixedNorm { target: 1.0 }).unwrap();
            let mut last = 0.0;
            for step in 1..=25 {
                let x = step as f64 * 0.05;
                let d = 1.0 - identity_coeff(&evolve(&h, x)).norm_sqr();
                assert!(d >= last - 1e-12, "x = {x}");
                last = d;
            }
        }
    }
}

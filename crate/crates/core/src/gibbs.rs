//! Learning a Gibbs state by a min-max search over an enumerable net of
//! candidate Hamiltonians, and testing two Gibbs states for equality from
//! shadow estimates of their low-weight Pauli coefficients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certifier::{PromiseStatus, Verdict};
use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{gibbs_matrix, GibbsState, LocalHamiltonian, PauliSum};
use crate::linalg::{qubits_for_dimension, DenseOperator};
use crate::net::{build_net_with_budget, HamiltonianNet, DEFAULT_NET_BUDGET};
use crate::oracle::trace_distance;
use crate::pauli::{enumerate_local_paulis, PauliString};
use crate::shadows::{batch_count, shadow_budget, Combine, ShadowEstimates, ShadowTable};

/// Default cap on shadow samples drawn per state.
pub const DEFAULT_SAMPLE_BUDGET: u64 = 10_000_000_000_000;

/// Bound on the number of `k`-local strings, `100 n^k`.
fn pauli_count_bound(n: usize, k: usize) -> f64 {
    100.0 * (n as f64).powi(k as i32)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsLearnConfig {
    pub eps: f64,
    pub delta: f64,
    pub beta: f64,
    pub n: usize,
    pub k: usize,
    /// Grid spacing of the restricted net; `None` uses the covering spacing.
    pub eta: Option<f64>,
    pub net_budget: u64,
    pub sample_budget: u64,
}

impl GibbsLearnConfig {
    pub fn new(n: usize, k: usize, eps: f64, delta: f64, beta: f64) -> Self {
        Self { eps, delta, beta, n, k, eta: None, net_budget: DEFAULT_NET_BUDGET, sample_budget: DEFAULT_SAMPLE_BUDGET }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = Some(eta);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) || !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(format!("eps {} and delta {} must lie in (0, 1)", self.eps, self.delta)));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(invalid(format!("beta {} must be finite and >= 0", self.beta)));
        }
        if self.k == 0 || self.k > self.n {
            return Err(Error::Locality { n: self.n, k: self.k });
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0) {
                return Err(invalid(format!("grid spacing {eta} must be positive")));
            }
        }
        Ok(())
    }

    fn beta_floor(&self) -> f64 {
        self.beta.max(1.0)
    }

    /// `eps^2 / (100 max(beta,1) n^k)`: covering radius of the net.
    pub fn net_radius(&self) -> f64 {
        self.eps * self.eps / (self.beta_floor() * pauli_count_bound(self.n, self.k))
    }

    /// `eps^2 / max(beta,1)`: accuracy of every pairwise observable.
    pub fn obs_accuracy(&self) -> f64 {
        self.eps * self.eps / self.beta_floor()
    }

    pub fn per_pauli_accuracy(&self) -> f64 {
        self.obs_accuracy() / (2.0 * pauli_count_bound(self.n, self.k))
    }

    /// Spacing for which the net covers to `net_radius`.
    pub fn covering_eta(&self) -> f64 {
        self.net_radius() / (2.0 * pauli_count_bound(self.n, self.k) * self.beta.max(f64::MIN_POSITIVE))
    }

    pub fn eta(&self) -> f64 {
        self.eta.unwrap_or_else(|| self.covering_eta())
    }

    /// `3 eps^2 / max(beta,1)`: bound on the objective at the rounded truth.
    pub fn chain_bound(&self) -> f64 {
        3.0 * self.obs_accuracy()
    }

    pub fn samples(&self) -> Result<u64> {
        bounded_samples(self.n, self.k, self.per_pauli_accuracy(), self.delta, self.sample_budget)
    }

    pub fn build_net(&self, support: &[PauliString]) -> Result<HamiltonianNet> {
        build_net_with_budget(self.n, self.k, support, self.eta(), self.net_budget)
    }
}

fn bounded_samples(n: usize, k: usize, accuracy: f64, delta: f64, budget: u64) -> Result<u64> {
    let m = shadow_budget(n, k, accuracy, delta)?;
    if m > budget {
        return Err(Error::Budget { what: "shadow samples", needed: m as f64, budget: budget as f64 });
    }
    Ok(m)
}

/// Pauli expectations of every net member on the support, in index order.
#[derive(Clone, Debug)]
pub struct NetStates {
    pub support: Vec<PauliString>,
    pub expectations: Vec<Vec<f64>>,
}

impl NetStates {
    pub fn new(net: &HamiltonianNet, beta: f64) -> Result<Self> {
        let expectations = (0..net.len())
            .into_par_iter()
            .map(|i| -> Result<Vec<f64>> {
                let rho = gibbs_matrix(net.member(i)?.as_sum(), beta)?;
                Ok(net.support().iter().map(|p| p.trace_product(&rho).re).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(Self { support: net.support().to_vec(), expectations })
    }

    pub fn len(&self) -> usize {
        self.expectations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.expectations.is_empty()
    }
}

fn support_values(est: &ShadowEstimates, support: &[PauliString]) -> Result<Vec<f64>> {
    support
        .iter()
        .map(|p| est.get(p).ok_or_else(|| invalid(format!("no estimate for {p}"))))
        .collect()
}

/// `max_{i,j} |Delta'_{ij} - Tr[Delta H_{ij} tau]|` in closed form: the
/// pairwise maximum over a full product grid on `[-1, 1]` splits per string
/// into `2 |est_P - Tr[P tau]|`.
pub fn minmax_objective(est: &[f64], tau: &[f64]) -> f64 {
    est.iter().zip(tau).map(|(e, t)| 2.0 * (e - t).abs()).sum()
}

/// The same objective by the literal double loop over net pairs.
pub fn pairwise_objective(net: &HamiltonianNet, est: &[f64], tau: &[f64]) -> f64 {
    let g: Vec<f64> = (0..net.len())
        .map(|i| net.coefficients(i).iter().zip(est.iter().zip(tau)).map(|(h, (e, t))| h * (e - t)).sum())
        .collect();
    let mut best = 0.0f64;
    for gi in &g {
        for gj in &g {
            best = best.max((gi - gj).abs());
        }
    }
    best
}

/// Index of the smallest objective, scanning in `order`; ties keep the first seen.
pub fn argmin_in_order(objectives: &[f64], order: &[usize]) -> Option<usize> {
    order.iter().copied().fold(None, |best: Option<usize>, i| match best {
        Some(b) if objectives[b] <= objectives[i] => Some(b),
        _ => Some(i),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnThresholds {
    pub net_radius: f64,
    pub obs_accuracy: f64,
    pub per_pauli_accuracy: f64,
    pub covering_eta: f64,
    pub eta: f64,
    pub chain_bound: f64,
}

/// Ground truth from the dense oracle; never used by the learner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnTruth {
    pub trace_distance: f64,
    pub within_eps: bool,
    /// Objective at the member nearest to the truth, with exact estimates.
    pub chain_value: f64,
    pub chain_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnReport {
    pub config: GibbsLearnConfig,
    pub thresholds: LearnThresholds,
    pub net_size: usize,
    pub samples: u64,
    pub estimates: ShadowEstimates,
    pub index: usize,
    pub coefficients: Vec<f64>,
    pub objective: f64,
    pub oracle: Option<LearnTruth>,
}

pub struct LearnOutcome {
    pub index: usize,
    pub state: GibbsState,
    pub report: LearnReport,
}

impl LearnOutcome {
    /// Records the exact trace distance to the true state and the chain value
    /// at the rounded truth.
    pub fn attach_oracle(&mut self, truth: &LocalHamiltonian, net: &HamiltonianNet, states: &NetStates) -> Result<()> {
        let cfg = &self.report.config;
        let rho = gibbs_matrix(truth, cfg.beta)?;
        let distance = trace_distance(&rho, &self.state.rho)?;
        let exact: Vec<f64> = states.support.iter().map(|p| p.trace_product(&rho).re).collect();
        let chain_value = minmax_objective(&exact, &states.expectations[net.round(truth)]);
        self.report.oracle = Some(LearnTruth {
            trace_distance: distance,
            within_eps: distance <= cfg.eps,
            chain_value,
            chain_holds: chain_value <= cfg.chain_bound(),
        });
        Ok(())
    }
}

/// Picks the net member whose state best explains the estimates.
pub fn learn_from_estimates(
    est: &ShadowEstimates,
    net: &HamiltonianNet,
    states: &NetStates,
    config: &GibbsLearnConfig,
) -> Result<LearnOutcome> {
    config.validate()?;
    if net.num_qubits() != config.n || states.len() != net.len() {
        return Err(invalid("net, precomputed states and config disagree"));
    }
    let values = support_values(est, net.support())?;
    let objectives: Vec<f64> = states.expectations.par_iter().map(|tau| minmax_objective(&values, tau)).collect();
    let order: Vec<usize> = (0..objectives.len()).collect();
    let index = argmin_in_order(&objectives, &order).ok_or_else(|| invalid("empty net"))?;
    let member = net.member(index)?;
    let state = GibbsState { beta: config.beta, rho: gibbs_matrix(&member, config.beta)?, source: member };
    let report = LearnReport {
        config: config.clone(),
        thresholds: LearnThresholds {
            net_radius: config.net_radius(),
            obs_accuracy: config.obs_accuracy(),
            per_pauli_accuracy: config.per_pauli_accuracy(),
            covering_eta: config.covering_eta(),
            eta: net.eta(),
            chain_bound: config.chain_bound(),
        },
        net_size: net.len(),
        samples: est.samples,
        estimates: est.clone(),
        index,
        coefficients: net.coefficients(index),
        objective: objectives[index],
        oracle: None,
    };
    Ok(LearnOutcome { index, state, report })
}

/// Draws the shadow budget from `rho` and runs the min-max search.
pub fn learn_gibbs<R: Rng + ?Sized>(
    rho: &DenseOperator,
    net: &HamiltonianNet,
    states: &NetStates,
    config: &GibbsLearnConfig,
    rng: &mut R,
) -> Result<LearnOutcome> {
    config.validate()?;
    let m = config.samples()?;
    let table = ShadowTable::sample(rho, m, batch_count(config.n, config.k, config.delta), rng)?;
    let est = table.estimate_all(config.k, Combine::MedianOfMeans)?;
    learn_from_estimates(&est, net, states, config)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsCertConfig {
    pub eps: f64,
    pub delta: f64,
    pub beta: f64,
    pub n: usize,
    pub k: usize,
    pub sample_budget: u64,
}

impl GibbsCertConfig {
    pub fn new(n: usize, k: usize, eps: f64, delta: f64, beta: f64) -> Self {
        Self { eps, delta, beta, n, k, sample_budget: DEFAULT_SAMPLE_BUDGET }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) || !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(format!("eps {} and delta {} must lie in (0, 1)", self.eps, self.delta)));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(invalid(format!("beta {} must be finite and > 0 for Gibbs certification", self.beta)));
        }
        if self.k == 0 || self.k > self.n {
            return Err(Error::Locality { n: self.n, k: self.k });
        }
        Ok(())
    }

    fn scale(&self) -> f64 {
        self.eps * self.eps / (4.0 * self.beta * pauli_count_bound(self.n, self.k))
    }

    /// `eps^2 / (800 beta n^k)`.
    pub fn per_pauli_accuracy(&self) -> f64 {
        self.scale() / 2.0
    }

    /// `3 eps^2 / (400 beta n^k)`.
    pub fn far_threshold(&self) -> f64 {
        3.0 * self.scale()
    }

    /// `eps^2 / (400 beta n^k)`.
    pub fn close_promise(&self) -> f64 {
        self.scale()
    }

    pub fn far_promise(&self) -> f64 {
        2.0 * self.eps
    }

    /// The close radius reaches the far radius; no pair of admissible states is far.
    pub fn degenerate(&self) -> bool {
        self.close_promise() >= self.far_promise()
    }

    pub fn samples(&self) -> Result<u64> {
        bounded_samples(self.n, self.k, self.per_pauli_accuracy(), self.delta, self.sample_budget)
    }

    pub fn promise(&self, distance: f64) -> PromiseStatus {
        if distance <= self.close_promise() {
            PromiseStatus::Close
        } else if distance >= self.far_promise() {
            PromiseStatus::Far
        } else {
            PromiseStatus::Neither
        }
    }
}

/// How the reference state is accessed.
#[derive(Clone, Copy, Debug)]
pub enum Reference<'a> {
    /// Copies only; estimated with shadows like the unknown state.
    Unknown(&'a DenseOperator),
    /// Exact coefficients are used in place of estimates.
    Known(&'a DenseOperator),
}

impl Reference<'_> {
    fn rho(&self) -> &DenseOperator {
        match self {
            Reference::Unknown(r) | Reference::Known(r) => r,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsCertThresholds {
    pub per_pauli_accuracy: f64,
    pub far_threshold: f64,
    pub close_promise: f64,
    pub far_promise: f64,
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsCertTruth {
    pub trace_distance: f64,
    pub promise: PromiseStatus,
    pub correct: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsCertReport {
    pub verdict: Verdict,
    pub config: GibbsCertConfig,
    pub thresholds: GibbsCertThresholds,
    pub reference_known: bool,
    pub samples_per_state: u64,
    /// Largest estimated coefficient gap and the string attaining it.
    pub max_gap: f64,
    pub witness: PauliString,
    pub estimates: ShadowEstimates,
    pub reference_estimates: ShadowEstimates,
    pub oracle: Option<GibbsCertTruth>,
}

impl GibbsCertReport {
    pub fn attach_oracle(&mut self, rho: &DenseOperator, rho0: &DenseOperator) -> Result<()> {
        let distance = trace_distance(rho, rho0)?;
        let promise = self.config.promise(distance);
        let correct = match promise {
            PromiseStatus::Close => Some(self.verdict == Verdict::Close),
            PromiseStatus::Far => Some(self.verdict == Verdict::Far),
            PromiseStatus::Neither => None,
        };
        self.oracle = Some(GibbsCertTruth { trace_distance: distance, promise, correct });
        Ok(())
    }
}

fn estimate_state(rho: &DenseOperator, cfg: &GibbsCertConfig, m: u64, seed: u64) -> Result<ShadowEstimates> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ShadowTable::sample(rho, m, batch_count(cfg.n, cfg.k, cfg.delta), &mut rng)?.estimate_all(cfg.k, Combine::MedianOfMeans)
}

/// Certification with one seed per sampled state.
pub fn certify_gibbs_seeded(
    rho: &DenseOperator,
    reference: Reference<'_>,
    config: &GibbsCertConfig,
    seed_rho: u64,
    seed_ref: u64,
) -> Result<GibbsCertReport> {
    config.validate()?;
    for r in [rho, reference.rho()] {
        let n = qubits_for_dimension(r.nrows())?;
        if n != config.n {
            return Err(Error::QubitMismatch { left: config.n, right: n });
        }
    }
    // Below the degenerate temperature every admissible pair is already
    // within the close radius, so no copies are consumed.
    let skip = config.degenerate();
    let empty = || ShadowEstimates { n: config.n, k: config.k, samples: 0, batches: 0, estimates: Default::default() };
    let m = if skip { 0 } else { config.samples()? };
    let est = if skip { empty() } else { estimate_state(rho, config, m, seed_rho)? };
    let (reference_known, est0) = match reference {
        Reference::Unknown(_) if skip => (false, empty()),
        Reference::Known(_) if skip => (true, empty()),
        Reference::Unknown(r0) => (false, estimate_state(r0, config, m, seed_ref)?),
        Reference::Known(r0) => (true, ShadowEstimates::exact(r0, config.k)?),
    };
    let mut witness = PauliString::identity(config.n)?;
    let mut max_gap = 0.0;
    for p in enumerate_local_paulis(config.n, config.k, false)? {
        let gap = (est.get(&p).unwrap_or(0.0) - est0.get(&p).unwrap_or(0.0)).abs();
        if gap > max_gap {
            max_gap = gap;
            witness = p;
        }
    }
    let verdict = if max_gap >= config.far_threshold() { Verdict::Far } else { Verdict::Close };
    Ok(GibbsCertReport {
        verdict,
        config: config.clone(),
        thresholds: GibbsCertThresholds {
            per_pauli_accuracy: config.per_pauli_accuracy(),
            far_threshold: config.far_threshold(),
            close_promise: config.close_promise(),
            far_promise: config.far_promise(),
            degenerate: config.degenerate(),
        },
        reference_known,
        samples_per_state: m,
        max_gap,
        witness,
        estimates: est,
        reference_estimates: est0,
        oracle: None,
    })
}

pub fn certify_gibbs<R: Rng + ?Sized>(
    rho: &DenseOperator,
    reference: Reference<'_>,
    config: &GibbsCertConfig,
    rng: &mut R,
) -> Result<GibbsCertReport> {
    let (a, b) = (rng.next_u64(), rng.next_u64());
    certify_gibbs_seeded(rho, reference, config, a, b)
}

/// Both sides of the three trace-distance bounds between two Gibbs states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PinskerGap {
    pub lhs: f64,
    /// `sqrt(2 beta Tr[(rho - rho') (H' - H)])`.
    pub relative_entropy: f64,
    /// `200 beta n^k sup |h_P - h'_P|`.
    pub coefficient: f64,
    /// `sqrt(400 beta n^k sup 2^n |rho_P - rho'_P|)`.
    pub moment: f64,
}

impl PinskerGap {
    pub fn slacks(&self) -> [f64; 3] {
        [self.relative_entropy - self.lhs, self.coefficient - self.lhs, self.moment - self.lhs]
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.slacks().iter().all(|s| *s >= -tol)
    }
}

pub fn pinsker_gap(rho: &DenseOperator, rho0: &DenseOperator, h: &PauliSum, h0: &PauliSum, beta: f64) -> Result<PinskerGap> {
    let n = h.num_qubits();
    if h0.num_qubits() != n || qubits_for_dimension(rho.nrows())? != n || qubits_for_dimension(rho0.nrows())? != n {
        return Err(invalid("states and Hamiltonians act on different qubit counts"));
    }
    let k = h.max_weight().max(h0.max_weight()).max(1);
    let diff = rho - rho0;
    let lhs = trace_distance(rho, rho0)?;
    let cross = (&diff * h0.minus(h)?.to_matrix()).trace().re.max(0.0);
    let sup = enumerate_local_paulis(n, k, false)?
        .iter()
        .map(|p| p.trace_product(&diff).re.abs())
        .fold(0.0, f64::max);
    let count = pauli_count_bound(n, k);
    Ok(PinskerGap {
        lhs,
        relative_entropy: (2.0 * beta * cross).sqrt(),
        coefficient: 2.0 * count * beta * h.max_coeff_gap(h0),
        moment: (4.0 * count * beta * sup).sqrt(),
    })
}

pub fn pinsker_gap_states(a: &GibbsState, b: &GibbsState) -> Result<PinskerGap> {
    if a.beta != b.beta {
        return Err(invalid("Gibbs states at different temperatures"));
    }
    pinsker_gap(&a.rho, &b.rho, &a.source, &b.source, a.beta)
}

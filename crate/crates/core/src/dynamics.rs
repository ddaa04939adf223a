//! The time-evolution access model: experiment plans that interleave queries
//! to `exp(-itH)` with known gates, a simulator that charges every query to a
//! ledger, depolarizing SPAM and query noise, and the symmetric Trotter
//! product that realizes `exp(-it(H - H0))` from queries to `H`.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{random_hamiltonian_with, CoefficientLaw, PauliSum};
use crate::linalg::{identity, is_density_matrix, DenseOperator, MatrixData, StateVector, EXACT_TOL};
use crate::oracle::Propagator;
use crate::pauli::{check_qubits, Letter, PauliString};
use crate::stabilizer::{measure_density, measure_vector, StabilizerState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    /// Computational basis state `|index>`.
    Basis { index: usize },
    Stabilizer { state: StabilizerState },
    Density { rho: MatrixData },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasurementBasis {
    Computational,
    /// Each qubit measured in the eigenbasis of its letter; no `I` letters.
    Pauli { word: PauliString },
    /// The orthonormal basis of sign-flipped versions of a stabilizer state;
    /// outcome 0 is the state itself.
    Stabilizer { state: StabilizerState },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FixedGate {
    /// `exp(-i time H)` for a known `H`.
    Evolution { hamiltonian: PauliSum, time: f64 },
    Dense { matrix: MatrixData },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Step {
    /// `exp(-i time H)` for the unknown `H`; a negative time queries the inverse.
    Query { time: f64 },
    /// Apply `gates[gate]`.
    Fixed { gate: usize },
    Repeat { count: u64, body: Vec<Step> },
}

/// Known gates plus a step list; the unitary part of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitaryFragment {
    pub gates: Vec<FixedGate>,
    pub steps: Vec<Step>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub n: usize,
    pub initial: InitialState,
    pub gates: Vec<FixedGate>,
    pub steps: Vec<Step>,
    pub measurement: MeasurementBasis,
}

/// Query cost of one pass over a step list.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryCost {
    pub total_time: f64,
    pub queries: u64,
    pub min_time: Option<f64>,
}

impl QueryCost {
    const NONE: QueryCost = QueryCost { total_time: 0.0, queries: 0, min_time: None };

    fn then(self, other: QueryCost) -> QueryCost {
        QueryCost {
            total_time: self.total_time + other.total_time,
            queries: self.queries + other.queries,
            min_time: min_opt(self.min_time, other.min_time),
        }
    }

    fn repeated(self, count: u64) -> QueryCost {
        if count == 0 {
            return QueryCost::NONE;
        }
        QueryCost {
            total_time: self.total_time * count as f64,
            queries: self.queries * count,
            min_time: self.min_time,
        }
    }
}

fn min_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Running cost of a protocol in the time-evolution access model.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentLedger {
    /// Sum of `|t_i|` over every query to the unknown Hamiltonian.
    pub total_evolution_time: f64,
    pub query_count: u64,
    /// Smallest `|t_i|` queried so far.
    pub min_query_time: Option<f64>,
    pub experiment_count: u64,
}

impl ExperimentLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Charges `experiments` runs of a circuit with per-run cost `cost`.
    pub fn charge(&mut self, cost: &QueryCost, experiments: u64) {
        if experiments == 0 {
            return;
        }
        self.total_evolution_time += cost.total_time * experiments as f64;
        self.query_count += cost.queries * experiments;
        self.min_query_time = min_opt(self.min_query_time, cost.min_time);
        self.experiment_count += experiments;
    }

    pub fn absorb(&mut self, other: &ExperimentLedger) {
        self.total_evolution_time += other.total_evolution_time;
        self.query_count += other.query_count;
        self.min_query_time = min_opt(self.min_query_time, other.min_query_time);
        self.experiment_count += other.experiment_count;
    }
}

/// Diamond-norm budgets for depolarizing noise; the diamond norm is the
/// unhalved one, so a perfect channel has distance 0 and the largest is 2.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Split equally between a channel after preparation and one before measurement.
    pub spam: f64,
    /// Applied after every query.
    pub per_query: f64,
}

/// Strength `p` of `rho -> (1-p) rho + p I/d` with diamond distance `budget` from the identity channel.
pub fn depolarizing_strength(budget: f64, dim: usize) -> f64 {
    let d2 = (dim * dim) as f64;
    (budget / (2.0 * (1.0 - 1.0 / d2))).min(1.0)
}

impl NoiseModel {
    pub const NONE: NoiseModel = NoiseModel { spam: 0.0, per_query: 0.0 };

    pub fn spam_only(spam: f64) -> Self {
        Self { spam, per_query: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spam >= 0.0 && self.per_query >= 0.0) || !self.spam.is_finite() || !self.per_query.is_finite() {
            return Err(invalid(format!("noise budgets must be finite and >= 0, got {self:?}")));
        }
        Ok(())
    }

    fn spam_survival(&self, dim: usize) -> f64 {
        (1.0 - depolarizing_strength(self.spam / 2.0, dim)).powi(2)
    }
}

/// A step list reduced to one unitary and its cost.
#[derive(Clone, Debug)]
pub struct CompiledCircuit {
    pub n: usize,
    pub unitary: DenseOperator,
    pub cost: QueryCost,
    /// Probability the global depolarizing noise leaves the state untouched,
    /// SPAM included. Depolarizing channels commute with unitaries, so the
    /// whole noisy circuit is `f W rho W^dagger + (1 - f) I/d`.
    pub survival: f64,
}

/// Answers queries to `exp(-itH)` for a hidden `H`.
pub struct QuerySimulator {
    n: usize,
    propagator: Propagator,
    noise: NoiseModel,
}

impl QuerySimulator {
    pub fn new(h: &PauliSum, noise: NoiseModel) -> Result<Self> {
        noise.validate()?;
        Ok(Self { n: h.num_qubits(), propagator: Propagator::new(h), noise })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn compile(&self, fragment: &UnitaryFragment) -> Result<CompiledCircuit> {
        let gates = fragment
            .gates
            .iter()
            .map(|g| gate_matrix(self.n, g))
            .collect::<Result<Vec<_>>>()?;
        let dim = 1usize << self.n;
        let q = depolarizing_strength(self.noise.per_query, dim);
        let (unitary, cost) = self.compile_steps(&fragment.steps, &gates)?;
        let survival = self.noise.spam_survival(dim) * (1.0 - q).powf(cost.queries as f64);
        Ok(CompiledCircuit { n: self.n, unitary, cost, survival })
    }

    fn compile_steps(&self, steps: &[Step], gates: &[DenseOperator]) -> Result<(DenseOperator, QueryCost)> {
        let mut u = identity(1 << self.n);
        let mut cost = QueryCost::NONE;
        for step in steps {
            let (v, c) = match step {
                Step::Query { time } => {
                    check_query_time(*time)?;
                    let c = QueryCost { total_time: time.abs(), queries: 1, min_time: Some(time.abs()) };
                    (self.propagator.at(*time), c)
                }
                Step::Fixed { gate } => {
                    let m = gates
                        .get(*gate)
                        .ok_or_else(|| invalid(format!("gate index {gate} out of range")))?;
                    (m.clone(), QueryCost::NONE)
                }
                Step::Repeat { count, body } => {
                    let (b, c) = self.compile_steps(body, gates)?;
                    (matrix_power(&b, *count), c.repeated(*count))
                }
            };
            u = v * u;
            cost = cost.then(c);
        }
        Ok((u, cost))
    }

    /// Runs one experiment and charges it to `ledger`.
    pub fn run<R: Rng + ?Sized>(&self, plan: &ExperimentPlan, rng: &mut R, ledger: &mut ExperimentLedger) -> Result<usize> {
        if plan.n != self.n {
            return Err(Error::QubitMismatch { left: self.n, right: plan.n });
        }
        plan.validate()?;
        let circuit = self.compile(&UnitaryFragment { gates: plan.gates.clone(), steps: plan.steps.clone() })?;
        circuit.execute(&plan.initial, &plan.measurement, rng, ledger)
    }
}

fn check_query_time(t: f64) -> Result<()> {
    if t == 0.0 || !t.is_finite() {
        return Err(invalid(format!("query time {t} must be finite and nonzero")));
    }
    Ok(())
}

fn gate_matrix(n: usize, g: &FixedGate) -> Result<DenseOperator> {
    match g {
        FixedGate::Evolution { hamiltonian, time } => {
            if hamiltonian.num_qubits() != n || hamiltonian.terms().any(|(p, _)| p.num_qubits() != n) {
                return Err(Error::QubitMismatch { left: n, right: hamiltonian.num_qubits() });
            }
            Ok(Propagator::new(hamiltonian).at(*time))
        }
        FixedGate::Dense { matrix } => {
            let m = matrix.to_matrix()?;
            if m.nrows() != 1 << n {
                return Err(Error::Dimension(m.nrows()));
            }
            if !crate::linalg::is_unitary(&m, EXACT_TOL) {
                return Err(invalid("fixed gate is not unitary"));
            }
            Ok(m)
        }
    }
}

fn matrix_power(m: &DenseOperator, mut e: u64) -> DenseOperator {
    let mut result = identity(m.nrows());
    let mut base = m.clone();
    while e > 0 {
        if e & 1 == 1 {
            result = &base * result;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

fn measurement_generators(n: usize, basis: &MeasurementBasis) -> Result<(Vec<PauliString>, Vec<bool>)> {
    match basis {
        MeasurementBasis::Computational => {
            let g = (0..n).map(|q| PauliString::single(n, q, Letter::Z)).collect::<Result<_>>()?;
            Ok((g, vec![false; n]))
        }
        MeasurementBasis::Pauli { word } => {
            if word.num_qubits() != n {
                return Err(Error::QubitMismatch { left: n, right: word.num_qubits() });
            }
            if word.weight() != n {
                return Err(invalid(format!("measurement word {word} has identity letters")));
            }
            let g = (0..n).map(|q| PauliString::single(n, q, word.letter(q))).collect::<Result<_>>()?;
            Ok((g, vec![false; n]))
        }
        MeasurementBasis::Stabilizer { state } => {
            state.validate()?;
            if state.num_qubits() != n {
                return Err(Error::QubitMismatch { left: n, right: state.num_qubits() });
            }
            Ok((state.generators.clone(), state.signs.clone()))
        }
    }
}

enum Prepared {
    Pure(StateVector),
    Mixed(DenseOperator),
}

fn prepare(n: usize, initial: &InitialState) -> Result<Prepared> {
    let dim = 1usize << n;
    match initial {
        InitialState::Basis { index } => {
            if *index >= dim {
                return Err(invalid(format!("basis index {index} out of range for {n} qubits")));
            }
            let mut v = StateVector::zeros(dim);
            v[*index] = Complex64::new(1.0, 0.0);
            Ok(Prepared::Pure(v))
        }
        InitialState::Stabilizer { state } => {
            state.validate()?;
            if state.num_qubits() != n {
                return Err(Error::QubitMismatch { left: n, right: state.num_qubits() });
            }
            Ok(Prepared::Pure(state.state_vector()))
        }
        InitialState::Density { rho } => {
            let m = rho.to_matrix()?;
            if m.nrows() != dim {
                return Err(Error::Dimension(m.nrows()));
            }
            if !is_density_matrix(&m, EXACT_TOL) {
                return Err(invalid("initial state is not a normalized density matrix"));
            }
            Ok(Prepared::Mixed(m))
        }
    }
}

impl CompiledCircuit {
    /// Prepares, applies the compiled unitary, measures, and charges one experiment.
    pub fn execute<R: Rng + ?Sized>(
        &self,
        initial: &InitialState,
        measurement: &MeasurementBasis,
        rng: &mut R,
        ledger: &mut ExperimentLedger,
    ) -> Result<usize> {
        let prepared = prepare(self.n, initial)?;
        let (generators, signs) = measurement_generators(self.n, measurement)?;
        ledger.charge(&self.cost, 1);
        if self.survival < 1.0 && rng.random::<f64>() >= self.survival {
            return Ok(rng.random_range(0..1usize << self.n));
        }
        Ok(match prepared {
            Prepared::Pure(v) => {
                let mut psi = &self.unitary * v;
                measure_vector(&mut psi, &generators, &signs, rng)
            }
            Prepared::Mixed(rho) => {
                let mut out = &self.unitary * rho * self.unitary.adjoint();
                measure_density(&mut out, &generators, &signs, rng)
            }
        })
    }

    /// Probability of `outcome`, noise included.
    pub fn outcome_probability(&self, initial: &InitialState, measurement: &MeasurementBasis, outcome: usize) -> Result<f64> {
        let dim = 1usize << self.n;
        let (generators, signs) = measurement_generators(self.n, measurement)?;
        let projector = StabilizerState { generators, signs }.flipped(outcome).density();
        let ideal = match prepare(self.n, initial)? {
            Prepared::Pure(v) => {
                let w = &self.unitary * v;
                w.dotc(&(&projector * &w)).re
            }
            Prepared::Mixed(rho) => (projector * &self.unitary * rho * self.unitary.adjoint()).trace().re,
        };
        Ok(self.survival * ideal + (1.0 - self.survival) / dim as f64)
    }
}

impl ExperimentPlan {
    pub fn from_fragment(n: usize, initial: InitialState, fragment: UnitaryFragment, measurement: MeasurementBasis) -> Self {
        Self { n, initial, gates: fragment.gates, steps: fragment.steps, measurement }
    }

    pub fn validate(&self) -> Result<()> {
        check_qubits(self.n)?;
        prepare(self.n, &self.initial)?;
        measurement_generators(self.n, &self.measurement)?;
        for g in &self.gates {
            gate_matrix(self.n, g)?;
        }
        fn walk(steps: &[Step], gates: usize) -> Result<()> {
            for s in steps {
                match s {
                    Step::Query { time } => check_query_time(*time)?,
                    Step::Fixed { gate } if *gate >= gates => {
                        return Err(invalid(format!("gate index {gate} out of range")))
                    }
                    Step::Fixed { .. } => {}
                    Step::Repeat { body, .. } => walk(body, gates)?,
                }
            }
            Ok(())
        }
        walk(&self.steps, self.gates.len())
    }

    /// Number of query slots, counting repeats.
    pub fn query_slots(&self) -> u64 {
        fn count(steps: &[Step]) -> u64 {
            steps
                .iter()
                .map(|s| match s {
                    Step::Query { .. } => 1,
                    Step::Fixed { .. } => 0,
                    Step::Repeat { count: c, body } => c * count(body),
                })
                .sum()
        }
        count(&self.steps)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let plan: Self = serde_json::from_str(text)?;
        plan.validate()?;
        Ok(plan)
    }
}

/// Compiles and runs a single experiment against `h`.
pub fn run_experiment<R: Rng + ?Sized>(
    plan: &ExperimentPlan,
    h: &PauliSum,
    noise: NoiseModel,
    rng: &mut R,
    ledger: &mut ExperimentLedger,
) -> Result<usize> {
    QuerySimulator::new(h, noise)?.run(plan, rng, ledger)
}

/// Multiplier on the Trotter step count, found by doubling from 1 until every
/// case of [`trotter_corpus`] meets its error target.
pub const TROTTER_KAPPA: f64 = 1.0;

/// Largest Trotter step count accepted by [`trotter_compile`].
pub const MAX_TROTTER_STEPS: u64 = 1 << 40;

/// `l = ceil(kappa * sqrt((c t)^3 / eps))`, at least 1.
pub fn trotter_steps(c: f64, t: f64, eps: f64, kappa: f64) -> Result<u64> {
    if !(t > 0.0) || !(eps > 0.0) || !(c >= 0.0) || !(kappa > 0.0) {
        return Err(invalid(format!("Trotter needs t > 0, eps > 0, c >= 0, kappa > 0 (t={t}, eps={eps}, c={c})")));
    }
    let l = (kappa * ((c * t).powi(3) / eps).sqrt()).ceil().max(1.0);
    if !(l <= MAX_TROTTER_STEPS as f64) {
        return Err(Error::Budget { what: "Trotter steps", needed: l, budget: MAX_TROTTER_STEPS as f64 });
    }
    Ok(l as u64)
}

/// `(exp(-itH/2l) exp(itH0/l) exp(-itH/2l))^l`, with `H` reached through queries.
pub fn trotter_compile(h0: &PauliSum, t: f64, eps: f64, c: f64, kappa: f64) -> Result<UnitaryFragment> {
    let l = trotter_steps(c, t, eps, kappa)?;
    let half = t / (2.0 * l as f64);
    Ok(UnitaryFragment {
        gates: vec![FixedGate::Evolution { hamiltonian: h0.clone(), time: -t / l as f64 }],
        steps: vec![Step::Repeat {
            count: l,
            body: vec![Step::Query { time: half }, Step::Fixed { gate: 0 }, Step::Query { time: half }],
        }],
    })
}

/// The Trotter product with both Hamiltonians known, for oracle checks.
pub fn trotter_unitary(h: &PauliSum, h0: &PauliSum, t: f64, l: u64) -> DenseOperator {
    let half = Propagator::new(h).at(t / (2.0 * l as f64));
    let mid = Propagator::new(h0).at(-t / l as f64);
    matrix_power(&(&half * mid * &half), l)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrotterCase {
    pub h: PauliSum,
    pub h0: PauliSum,
    pub t: f64,
    pub eps: f64,
}

impl TrotterCase {
    pub fn norm_bound(&self) -> f64 {
        self.h.operator_norm().max(self.h0.operator_norm())
    }

    /// `||V - exp(-it(H - H0))||_op` with `l` from `kappa`.
    pub fn error(&self, kappa: f64) -> Result<f64> {
        let l = trotter_steps(self.norm_bound(), self.t, self.eps, kappa)?;
        let v = trotter_unitary(&self.h, &self.h0, self.t, l);
        let exact = Propagator::new(&self.h.minus(&self.h0)?).at(self.t);
        Ok(crate::linalg::operator_norm(&(v - exact)))
    }
}

pub const TROTTER_CORPUS_SEED: u64 = 0x7407;

/// Random pairs with `n <= 3`, 2-local, operator norms in `(0, 1]`,
/// `t in (0, 1]`; every pair appears once at each target in `{1e-3, 1e-5}`.
pub fn trotter_corpus(seed: u64, pairs: usize) -> Result<Vec<TrotterCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(2 * pairs);
    for i in 0..pairs {
        let n = 1 + i % 3;
        let k = n.min(2);
        let draw = |rng: &mut ChaCha8Rng| -> Result<PauliSum> {
            let h = random_hamiltonian_with(n, k, rng, &CoefficientLaw::Uniform)?.into_sum();
            let target = rng.random_range(0.1..=1.0);
            Ok(h.scaled(target / h.operator_norm()))
        };
        let h = draw(&mut rng)?;
        let h0 = draw(&mut rng)?;
        let t = 1.0 - rng.random::<f64>();
        for eps in [1e-3, 1e-5] {
            out.push(TrotterCase { h: h.clone(), h0: h0.clone(), t, eps });
        }
    }
    Ok(out)
}

/// Smallest `kappa` in `1, 2, 4, ...` (up to `max_kappa`) meeting every target.
pub fn calibrate_trotter_kappa(cases: &[TrotterCase], max_kappa: f64) -> Result<f64> {
    let mut kappa = 1.0;
    while kappa <= max_kappa {
        let mut ok = true;
        for c in cases {
            if c.error(kappa)? > c.eps {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(kappa);
        }
        kappa *= 2.0;
    }
    Err(invalid(format!("no kappa up to {max_kappa} meets the Trotter targets")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::LocalHamiltonian;
    use crate::linalg::{max_abs, operator_norm};
    use crate::stabilizer::sample_stabilizer_state;

    fn sum(n: usize, terms: &[(&str, f64)]) -> PauliSum {
        LocalHamiltonian::from_words(n, n, terms).unwrap().into_sum()
    }

    fn plus_state() -> InitialState {
        InitialState::Stabilizer { state: StabilizerState::new(vec!["X".parse().unwrap()], vec![false]).unwrap() }
    }

    #[test]
    fn no_queries_measures_initial_basis_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ledger = ExperimentLedger::new();
        let plan = ExperimentPlan {
            n: 2,
            initial: InitialState::Basis { index: 0 },
            gates: vec![],
            steps: vec![],
            measurement: MeasurementBasis::Computational,
        };
        let h = sum(2, &[("ZZ", 0.7)]);
        for _ in 0..100 {
            assert_eq!(run_experiment(&plan, &h, NoiseModel::NONE, &mut rng, &mut ledger).unwrap(), 0);
        }
        assert_eq!(ledger.experiment_count, 100);
        assert_eq!(ledger.query_count, 0);
        assert_eq!(ledger.min_query_time, None);
    }

    #[test]
    fn rabi_probability() {
        let h = sum(1, &[("Z", 1.0)]);
        let sim = QuerySimulator::new(&h, NoiseModel::NONE).unwrap();
        for t in [0.1, 0.4, 1.0, 2.3] {
            let frag = UnitaryFragment { gates: vec![], steps: vec![Step::Query { time: t }] };
            let circuit = sim.compile(&frag).unwrap();
            let basis = MeasurementBasis::Pauli { word: "X".parse().unwrap() };
            let p = circuit.outcome_probability(&plus_state(), &basis, 0).unwrap();
            assert!((p - t.cos().powi(2)).abs() < 1e-12);

            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let mut ledger = ExperimentLedger::new();
            let draws = 20_000;
            let hits = (0..draws)
                .filter(|_| circuit.execute(&plus_state(), &basis, &mut rng, &mut ledger).unwrap() == 0)
                .count();
            let sigma = (draws as f64 * p * (1.0 - p)).sqrt().max(1.0);
            assert!((hits as f64 - draws as f64 * p).abs() < 4.0 * sigma);
        }
    }

    #[test]
    fn ledger_accounting() {
        let h = sum(1, &[("X", 0.3)]);
        let plan = ExperimentPlan {
            n: 1,
            initial: InitialState::Basis { index: 0 },
            gates: vec![],
            steps: vec![Step::Query { time: 0.2 }],
            measurement: MeasurementBasis::Computational,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut ledger = ExperimentLedger::new();
        for _ in 0..3 {
            run_experiment(&plan, &h, NoiseModel::NONE, &mut rng, &mut ledger).unwrap();
        }
        assert!((ledger.total_evolution_time - 0.6).abs() < 1e-15);
        assert_eq!(ledger.query_count, 3);
        assert_eq!(ledger.min_query_time, Some(0.2));
        assert_eq!(ledger.experiment_count, 3);
    }

    #[test]
    fn inverse_queries_are_charged_by_magnitude() {
        let h = sum(1, &[("X", 0.3)]);
        let sim = QuerySimulator::new(&h, NoiseModel::NONE).unwrap();
        let frag = UnitaryFragment { gates: vec![], steps: vec![Step::Query { time: 0.5 }, Step::Query { time: -0.5 }] };
        let c = sim.compile(&frag).unwrap();
        assert!(max_abs(&(c.unitary - identity(2))) < 1e-12);
        assert_eq!(c.cost.total_time, 1.0);
        assert_eq!(c.cost.queries, 2);
    }

    #[test]
    fn invalid_plans_are_rejected() {
        let h = sum(1, &[("X", 0.3)]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut ledger = ExperimentLedger::new();
        let mut plan = ExperimentPlan {
            n: 1,
            initial: InitialState::Density { rho: MatrixData::from(&(identity(2) * Complex64::new(0.7, 0.0))) },
            gates: vec![],
            steps: vec![],
            measurement: MeasurementBasis::Computational,
        };
        assert!(run_experiment(&plan, &h, NoiseModel::NONE, &mut rng, &mut ledger).is_err());
        plan.initial = InitialState::Basis { index: 0 };
        plan.measurement = MeasurementBasis::Pauli { word: "I".parse().unwrap() };
        assert!(run_experiment(&plan, &h, NoiseModel::NONE, &mut rng, &mut ledger).is_err());
        plan.measurement = MeasurementBasis::Computational;
        plan.steps = vec![Step::Fixed { gate: 0 }];
        assert!(run_experiment(&plan, &h, NoiseModel::NONE, &mut rng, &mut ledger).is_err());
        plan.steps = vec![Step::Query { time: 0.0 }];
        assert!(run_experiment(&plan, &h, NoiseModel::NONE, &mut rng, &mut ledger).is_err());
        assert_eq!(ledger.experiment_count, 0);
    }

    #[test]
    fn depolarizing_noise_mixes_toward_uniform() {
        assert!((depolarizing_strength(1.5, 2) - 1.0).abs() < 1e-15);
        let h = sum(1, &[("X", 0.3)]);
        let sim = QuerySimulator::new(&h, NoiseModel { spam: 0.2, per_query: 0.1 }).unwrap();
        let frag = UnitaryFragment { gates: vec![], steps: vec![Step::Query { time: 0.4 }] };
        let c = sim.compile(&frag).unwrap();
        let p_spam = depolarizing_strength(0.1, 2);
        let p_q = depolarizing_strength(0.1, 2);
        assert!((c.survival - (1.0 - p_spam).powi(2) * (1.0 - p_q)).abs() < 1e-15);
        let initial = InitialState::Basis { index: 0 };
        let basis = MeasurementBasis::Computational;
        let ideal = (0.3f64 * 0.4).cos().powi(2);
        let p = c.outcome_probability(&initial, &basis, 0).unwrap();
        assert!((p - (c.survival * ideal + (1.0 - c.survival) / 2.0)).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut ledger = ExperimentLedger::new();
        let draws = 40_000;
        let hits = (0..draws).filter(|_| c.execute(&initial, &basis, &mut rng, &mut ledger).unwrap() == 0).count();
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        assert!((hits as f64 - draws as f64 * p).abs() < 4.0 * sigma);
    }

    #[test]
    fn density_and_vector_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_hamiltonian_with(2, 2, &mut rng, &CoefficientLaw::Uniform).unwrap().into_sum();
        let sim = QuerySimulator::new(&h, NoiseModel::NONE).unwrap();
        let c = sim.compile(&UnitaryFragment { gates: vec![], steps: vec![Step::Query { time: 0.7 }] }).unwrap();
        let s = sample_stabilizer_state(2, &mut rng).unwrap();
        let m = MeasurementBasis::Stabilizer { state: sample_stabilizer_state(2, &mut rng).unwrap() };
        let pure = InitialState::Stabilizer { state: s.clone() };
        let mixed = InitialState::Density { rho: MatrixData::from(&s.density()) };
        for o in 0..4 {
            let a = c.outcome_probability(&pure, &m, o).unwrap();
            let b = c.outcome_probability(&mixed, &m, o).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_runs_are_deterministic_and_replay_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = random_hamiltonian_with(2, 2, &mut rng, &CoefficientLaw::Uniform).unwrap().into_sum();
        let h0 = random_hamiltonian_with(2, 2, &mut rng, &CoefficientLaw::Uniform).unwrap().into_sum();
        let frag = trotter_compile(&h0, 0.5, 1e-3, 3.0, TROTTER_KAPPA).unwrap();
        let plan = ExperimentPlan::from_fragment(
            2,
            InitialState::Stabilizer { state: sample_stabilizer_state(2, &mut rng).unwrap() },
            frag,
            MeasurementBasis::Stabilizer { state: sample_stabilizer_state(2, &mut rng).unwrap() },
        );
        let replayed = ExperimentPlan::from_json(&plan.to_json().unwrap()).unwrap();
        assert_eq!(replayed, plan);
        let run = |p: &ExperimentPlan| {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let mut ledger = ExperimentLedger::new();
            let outcomes: Vec<usize> =
                (0..50).map(|_| run_experiment(p, &h, NoiseModel::NONE, &mut rng, &mut ledger).unwrap()).collect();
            (outcomes, ledger)
        };
        let (a, la) = run(&plan);
        let (b, lb) = run(&replayed);
        assert_eq!(a, b);
        assert_eq!(la, lb);
        let ledger_json = serde_json::to_string(&la).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentLedger>(&ledger_json).unwrap(), la);
        assert_eq!(la.query_count, 50 * plan.query_slots());
    }

    #[test]
    fn trotter_degenerate_and_commuting_cases() {
        let h = sum(2, &[("XI", 0.4), ("ZZ", -0.3), ("IY", 0.2)]);
        let zero = PauliSum::zero(2).unwrap();
        for l in [1, 3, 10] {
            let v = trotter_unitary(&h, &zero, 0.8, l);
            assert!(operator_norm(&(v - Propagator::new(&h).at(0.8))) < 1e-10);
        }
        let a = sum(2, &[("ZI", 0.5), ("ZZ", 0.3)]);
        let b = sum(2, &[("IZ", -0.7), ("ZZ", 0.1)]);
        let v = trotter_unitary(&a, &b, 0.9, 2);
        assert!(operator_norm(&(v - Propagator::new(&a.minus(&b).unwrap()).at(0.9))) < 1e-10);
    }

    #[test]
    fn trotter_x_minus_z_example() {
        let case = TrotterCase { h: sum(1, &[("X", 1.0)]), h0: sum(1, &[("Z", 1.0)]), t: 0.3, eps: 1e-5 };
        assert!(case.error(TROTTER_KAPPA).unwrap() <= 1e-5);
    }

    #[test]
    fn compiled_fragment_matches_oracle_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = random_hamiltonian_with(2, 2, &mut rng, &CoefficientLaw::Uniform).unwrap().into_sum();
        let h0 = random_hamiltonian_with(2, 2, &mut rng, &CoefficientLaw::Uniform).unwrap().into_sum();
        let (t, eps, c) = (0.6, 1e-3, h.operator_norm().max(h0.operator_norm()));
        let frag = trotter_compile(&h0, t, eps, c, TROTTER_KAPPA).unwrap();
        let l = trotter_steps(c, t, eps, TROTTER_KAPPA).unwrap();
        let compiled = QuerySimulator::new(&h, NoiseModel::NONE).unwrap().compile(&frag).unwrap();
        assert!(max_abs(&(&compiled.unitary - trotter_unitary(&h, &h0, t, l))) < 1e-10);
        assert_eq!(compiled.cost.queries, 2 * l);
        assert!((compiled.cost.total_time - t).abs() < 1e-12);
        assert!((compiled.cost.min_time.unwrap() - t / (2.0 * l as f64)).abs() < 1e-15);
    }

    #[test]
    fn trotter_step_budget() {
        assert!(matches!(trotter_steps(1.0, 1.0, 1e-40, 1.0), Err(Error::Budget { .. })));
        assert_eq!(trotter_steps(0.0, 1.0, 1e-3, 1.0).unwrap(), 1);
        assert!(trotter_steps(1.0, 0.0, 1e-3, 1.0).is_err());
    }

    #[test]
    fn shipped_kappa_is_the_calibrated_value() {
        let cases = trotter_corpus(TROTTER_CORPUS_SEED, 30).unwrap();
        assert_eq!(calibrate_trotter_kappa(&cases, 64.0).unwrap(), TROTTER_KAPPA);
    }
}

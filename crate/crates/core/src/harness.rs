//! Seeded Monte Carlo driver behind the `hamcert` binary: TOML run configs,
//! per-trial records, JSON reports and CSV tables.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::certifier::{certify, CertConfig, EstimatorMode, Profile, PromiseStatus, Verdict};
use crate::constants::{constants_ledger, LedgerEntry};
use crate::dynamics::{NoiseModel, QuerySimulator};
use crate::error::{invalid, Error, Result};
use crate::gibbs::{
    certify_gibbs, learn_from_estimates, learn_gibbs, pinsker_gap, GibbsCertConfig, GibbsLearnConfig, NetStates,
    Reference,
};
use crate::hamiltonian::{gibbs_matrix, random_hamiltonian_with, CoefficientLaw, LocalHamiltonian, PauliSum};
use crate::identity::SamplingMode;
use crate::linalg::DenseOperator;
use crate::net::HamiltonianNet;
use crate::oracle::{bonami_factor, schatten_moment, trace_distance};
use crate::pauli::{enumerate_local_paulis, Letter, PauliString};
use crate::shadows::{
    batch_count, collect_shadows, read_dataset, shadow_budget_with, write_dataset, Combine, ShadowEstimates,
    ShadowTable, SHADOW_CONSTANT,
};

pub const SCHEMA_VERSION: u32 = 1;
/// Default output directory when neither the config nor `--out` names one.
pub const OUT_DIR_ENV: &str = "HAMCERT_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "hamcert-out";

/// Generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default = "one")]
    pub parallelism: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Profile>,
    #[serde(flatten)]
    pub task: Task,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", content = "params", rename_all = "kebab-case")]
pub enum Task {
    CertifyDynamics(DynamicsParams),
    LearnGibbs(LearnParams),
    CertifyGibbs(GibbsCertParams),
    VerifyBonami(BonamiParams),
    VerifyBounds(BoundsParams),
    ShadowEstimate(ShadowParams),
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::CertifyDynamics(_) => "certify-dynamics",
            Task::LearnGibbs(_) => "learn-gibbs",
            Task::CertifyGibbs(_) => "certify-gibbs",
            Task::VerifyBonami(_) => "verify-bonami",
            Task::VerifyBounds(_) => "verify-bounds",
            Task::ShadowEstimate(_) => "shadow-estimate",
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| invalid(format!("config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.trials == 0 || self.parallelism == 0 {
            return Err(invalid("trials and parallelism must be >= 1"));
        }
        Ok(())
    }

    pub fn resolved_profile(&self) -> Profile {
        self.profile.unwrap_or(Profile::Calibrated)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicsArm {
    /// `||H - H0||_F` uniform in `(0, eps]`.
    Close,
    /// `||H - H0||_F = far_multiple * eps`.
    Far,
    /// `H = H0`.
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsParams {
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
    pub arm: DynamicsArm,
    pub far_multiple: f64,
    /// Normalized Frobenius norm of the random reference `H0`.
    pub h0_norm: f64,
    pub c_frob: f64,
    pub estimator: EstimatorMode,
    pub noise: NoiseModel,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        Self {
            n: 2,
            eps: 0.05,
            delta: 0.1,
            arm: DynamicsArm::Close,
            far_multiple: 14.4,
            h0_norm: 0.5,
            c_frob: 2.0,
            estimator: EstimatorMode::Sampled { mode: SamplingMode::PerExperiment },
            noise: NoiseModel::NONE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnTruth {
    /// Coefficients uniform in `[-1, 1]` on the support.
    Random,
    /// A uniformly chosen net member.
    OnGrid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateSource {
    Sampled,
    /// Exact coefficients of the true state.
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnParams {
    pub n: usize,
    pub k: usize,
    pub beta: f64,
    pub eps: f64,
    pub delta: f64,
    pub support: Vec<String>,
    pub eta: f64,
    pub truth: LearnTruth,
    pub estimates: EstimateSource,
}

impl Default for LearnParams {
    fn default() -> Self {
        Self {
            n: 1,
            k: 1,
            beta: 1.0,
            eps: 0.3,
            delta: 0.1,
            support: vec!["Z".into()],
            eta: 0.25,
            truth: LearnTruth::Random,
            estimates: EstimateSource::Sampled,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GibbsArm {
    /// Both states are the same random Gibbs state.
    Equal,
    /// `H = sum_q a_q Z_q` against `-H`.
    Flip,
    /// Two independent random Hamiltonians.
    Random,
    /// Random pairs at a temperature where the close radius exceeds the far one.
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GibbsCertParams {
    pub n: usize,
    pub k: usize,
    pub beta: f64,
    pub eps: f64,
    pub delta: f64,
    pub arm: GibbsArm,
    pub known_reference: bool,
}

impl Default for GibbsCertParams {
    fn default() -> Self {
        Self { n: 2, k: 2, beta: 1.0, eps: 0.3, delta: 0.1, arm: GibbsArm::Equal, known_reference: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BonamiParams {
    pub max_n: usize,
    pub k: usize,
    pub l_min: u32,
    pub l_max: u32,
    pub tol: f64,
}

impl Default for BonamiParams {
    fn default() -> Self {
        Self { max_n: 5, k: 2, l_min: 3, l_max: 8, tol: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsParams {
    pub max_n: usize,
    pub k: usize,
    pub beta_max: f64,
    pub tol: f64,
}

impl Default for BoundsParams {
    fn default() -> Self {
        Self { max_n: 3, k: 2, beta_max: 3.0, tol: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShadowParams {
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    pub beta: f64,
    pub c_s: f64,
    /// Seed of the random Hamiltonian shared by all trials; defaults to the run seed.
    pub hamiltonian_seed: Option<u64>,
    /// Post-process this dataset instead of sampling.
    pub dataset: Option<PathBuf>,
    /// Write the raw samples of one extra draw next to the report.
    pub write_dataset: bool,
}

impl Default for ShadowParams {
    fn default() -> Self {
        Self {
            n: 3,
            k: 2,
            eps: 0.1,
            delta: 0.05,
            beta: 1.0,
            c_s: SHADOW_CONSTANT,
            hamiltonian_seed: None,
            dataset: None,
            write_dataset: false,
        }
    }
}

/// What the run found beyond its records.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Findings {
    /// Trials whose exact oracle contradicts the promise the arm was built for.
    pub promise_violations: usize,
    /// Checked inequalities that failed.
    pub verification_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool: String,
    pub task: String,
    pub config: RunConfig,
    pub profile: Profile,
    pub summary: Value,
    pub findings: Findings,
    pub constants: Vec<LedgerEntry>,
    pub records: Vec<Value>,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Records as a CSV table; nested values are written as JSON.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header: Vec<String> = match self.records.first() {
            Some(Value::Object(m)) => m.keys().cloned().collect(),
            _ => Vec::new(),
        };
        if !header.is_empty() {
            w.write_record(&header).map_err(csv_error)?;
        }
        for r in &self.records {
            let row: Vec<String> = header
                .iter()
                .map(|k| match r.get(k) {
                    None | Some(Value::Null) => String::new(),
                    Some(Value::String(s)) => s.clone(),
                    Some(v) => v.to_string(),
                })
                .collect();
            w.write_record(&row).map_err(csv_error)?;
        }
        let bytes = w.into_inner().map_err(|e| invalid(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| invalid(format!("csv: {e}")))
    }

    /// Writes `report.json` and `trials.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.to_json()?)?;
        fs::write(dir.join("trials.csv"), self.to_csv()?)?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    invalid(format!("csv: {e}"))
}

/// Process exit code for a finished run or an error.
pub fn exit_code(result: &Result<RunReport>) -> i32 {
    match result {
        Ok(r) if r.findings.promise_violations > 0 => 4,
        Ok(r) if r.findings.verification_violations > 0 => 5,
        Ok(_) => 0,
        Err(Error::Budget { .. }) => 3,
        Err(Error::Promise(_)) => 4,
        Err(Error::Io(_)) => 1,
        Err(_) => 2,
    }
}

/// Output directory: explicit override, then the config, then the environment.
pub fn resolve_out_dir(cli: Option<&Path>, config: &RunConfig) -> PathBuf {
    cli.map(Path::to_path_buf)
        .or_else(|| config.out.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

struct TaskOutput {
    summary: Value,
    findings: Findings,
    records: Vec<Value>,
}

fn run_trials<T, F>(config: &RunConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> Result<T> + Sync + Send,
{
    let go = || -> Result<Vec<T>> {
        (0..config.trials)
            .into_par_iter()
            .map(|i| f(i, &mut trial_rng(config.seed, i)))
            .collect()
    };
    if config.parallelism == 1 {
        (0..config.trials).map(|i| f(i, &mut trial_rng(config.seed, i))).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.parallelism)
            .build()
            .map_err(|e| invalid(format!("thread pool: {e}")))?;
        pool.install(go)
    }
}

fn to_values<T: Serialize>(records: &[T]) -> Result<Vec<Value>> {
    records.iter().map(|r| Ok(serde_json::to_value(r)?)).collect()
}

fn rate(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

/// Executes the configured task. The report embeds the resolved config.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let profile = config.resolved_profile();
    let out = match &config.task {
        Task::CertifyDynamics(p) => run_dynamics(config, p, profile)?,
        Task::LearnGibbs(p) => run_learn(config, p)?,
        Task::CertifyGibbs(p) => run_gibbs_cert(config, p)?,
        Task::VerifyBonami(p) => run_bonami(config, p)?,
        Task::VerifyBounds(p) => run_bounds(config, p)?,
        Task::ShadowEstimate(p) => run_shadows(config, p)?,
    };
    let mut resolved = config.clone();
    resolved.profile = Some(profile);
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        tool: format!("hamcert {}", env!("CARGO_PKG_VERSION")),
        task: config.task.name().to_string(),
        config: resolved,
        profile,
        summary: out.summary,
        findings: out.findings,
        constants: constants_ledger(),
        records: out.records,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsRecord {
    pub trial: usize,
    pub verdict: Verdict,
    pub frobenius_gap: f64,
    pub promise: PromiseStatus,
    pub correct: Option<bool>,
    pub levels_run: usize,
    pub total_evolution_time: f64,
    pub query_count: u64,
    pub experiments: u64,
    pub log_factor: f64,
    /// `total_evolution_time * eps / log_factor`.
    pub normalized_time: f64,
    pub evolution_time_bound: f64,
}

/// Reference and target for one dynamics trial. `c_op` is the smallest
/// integer bounding both operator norms.
pub fn dynamics_instance<R: Rng + ?Sized>(p: &DynamicsParams, rng: &mut R) -> Result<(PauliSum, PauliSum, f64)> {
    let k = p.n.min(2);
    let h0 = random_hamiltonian_with(p.n, k, rng, &CoefficientLaw::FixedNorm { target: p.h0_norm })?;
    let gap = match p.arm {
        DynamicsArm::Close => p.eps * (1.0 - rng.random::<f64>()),
        DynamicsArm::Far => p.far_multiple * p.eps,
        DynamicsArm::Zero => 0.0,
    };
    let h = if gap > 0.0 {
        let dh = random_hamiltonian_with(p.n, k, rng, &CoefficientLaw::FixedNorm { target: gap })?;
        h0.plus(&dh)?
    } else {
        h0.as_sum().clone()
    };
    let c_op = h.operator_norm().max(h0.operator_norm()).ceil().max(1.0);
    Ok((h, h0.into_sum(), c_op))
}

pub fn dynamics_trial<R: Rng + ?Sized>(
    trial: usize,
    p: &DynamicsParams,
    profile: Profile,
    rng: &mut R,
) -> Result<DynamicsRecord> {
    let (h, h0, c_op) = dynamics_instance(p, rng)?;
    let mut cfg = CertConfig::new(p.eps, p.delta, c_op, p.c_frob, profile);
    cfg.estimator = p.estimator;
    let sim = QuerySimulator::new(&h, p.noise)?;
    let mut report = certify(&h0, &sim, &cfg, rng)?;
    report.attach_oracle(&h, &h0)?;
    let oracle = report.oracle.clone().expect("oracle attached");
    let log_factor = report.schedule.log_factor();
    Ok(DynamicsRecord {
        trial,
        verdict: report.verdict,
        frobenius_gap: oracle.frobenius_gap,
        promise: oracle.promise,
        correct: oracle.correct,
        levels_run: report.iterations.len(),
        total_evolution_time: report.ledger.total_evolution_time,
        query_count: report.ledger.query_count,
        experiments: report.ledger.experiment_count,
        log_factor,
        normalized_time: report.ledger.total_evolution_time * p.eps / log_factor,
        evolution_time_bound: report.evolution_time_bound,
    })
}

fn run_dynamics(config: &RunConfig, p: &DynamicsParams, profile: Profile) -> Result<TaskOutput> {
    let records = run_trials(config, |i, rng| dynamics_trial(i, p, profile, rng))?;
    let expected = match p.arm {
        DynamicsArm::Close | DynamicsArm::Zero => PromiseStatus::Close,
        DynamicsArm::Far => PromiseStatus::Far,
    };
    let promise_violations = records.iter().filter(|r| r.promise != expected).count();
    let judged: Vec<_> = records.iter().filter_map(|r| r.correct).collect();
    let errors = judged.iter().filter(|c| !**c).count();
    let far = records.iter().filter(|r| r.verdict == Verdict::Far).count();
    let mean = |f: fn(&DynamicsRecord) -> f64| records.iter().map(f).sum::<f64>() / records.len() as f64;
    Ok(TaskOutput {
        summary: json!({
            "trials": records.len(),
            "error_rate": rate(errors, judged.len()),
            "far_rate": rate(far, records.len()),
            "close_rate": rate(records.len() - far, records.len()),
            "mean_total_evolution_time": mean(|r| r.total_evolution_time),
            "max_total_evolution_time": records.iter().map(|r| r.total_evolution_time).fold(0.0, f64::max),
            "mean_normalized_time": mean(|r| r.normalized_time),
            "log_factor": records[0].log_factor,
            "evolution_time_bound": records[0].evolution_time_bound,
        }),
        findings: Findings { promise_violations, verification_violations: 0 },
        records: to_values(&records)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnRecord {
    pub trial: usize,
    pub truth: Vec<f64>,
    pub index: usize,
    pub learned: Vec<f64>,
    pub exact_member: bool,
    pub objective: f64,
    pub trace_distance: f64,
    pub within_eps: bool,
    pub chain_value: f64,
    pub chain_holds: bool,
    pub samples: u64,
}

pub fn parse_support(n: usize, words: &[String]) -> Result<Vec<PauliString>> {
    words
        .iter()
        .map(|w| {
            let p: PauliString = w.parse()?;
            if p.num_qubits() != n {
                return Err(Error::QubitMismatch { left: n, right: p.num_qubits() });
            }
            Ok(p)
        })
        .collect()
}

/// Net, its precomputed states, and the learner config for `p`.
pub fn learn_setup(p: &LearnParams) -> Result<(HamiltonianNet, NetStates, GibbsLearnConfig)> {
    let cfg = GibbsLearnConfig::new(p.n, p.k, p.eps, p.delta, p.beta).with_eta(p.eta);
    cfg.validate()?;
    let net = cfg.build_net(&parse_support(p.n, &p.support)?)?;
    let states = NetStates::new(&net, p.beta)?;
    Ok((net, states, cfg))
}

pub fn learn_trial<R: Rng + ?Sized>(
    trial: usize,
    p: &LearnParams,
    setup: &(HamiltonianNet, NetStates, GibbsLearnConfig),
    rng: &mut R,
) -> Result<LearnRecord> {
    let (net, states, cfg) = setup;
    let truth: Vec<f64> = match p.truth {
        LearnTruth::Random => net.support().iter().map(|_| rng.random_range(-1.0..=1.0)).collect(),
        LearnTruth::OnGrid => net.coefficients(rng.random_range(0..net.len())),
    };
    let h = LocalHamiltonian::from_terms(p.n, p.k, net.support().iter().copied().zip(truth.iter().copied()))?;
    let rho = gibbs_matrix(&h, p.beta)?;
    let mut out = match p.estimates {
        EstimateSource::Sampled => learn_gibbs(&rho, net, states, cfg, rng)?,
        EstimateSource::Exact => learn_from_estimates(&ShadowEstimates::exact(&rho, p.k)?, net, states, cfg)?,
    };
    out.attach_oracle(&h, net, states)?;
    let o = out.report.oracle.clone().expect("oracle attached");
    Ok(LearnRecord {
        trial,
        exact_member: out.report.coefficients == truth,
        truth,
        index: out.index,
        learned: out.report.coefficients.clone(),
        objective: out.report.objective,
        trace_distance: o.trace_distance,
        within_eps: o.within_eps,
        chain_value: o.chain_value,
        chain_holds: o.chain_holds,
        samples: out.report.samples,
    })
}

fn run_learn(config: &RunConfig, p: &LearnParams) -> Result<TaskOutput> {
    let setup = learn_setup(p)?;
    let records = run_trials(config, |i, rng| learn_trial(i, p, &setup, rng))?;
    let n = records.len();
    let chain_failures = records.iter().filter(|r| !r.chain_holds).count();
    Ok(TaskOutput {
        summary: json!({
            "trials": n,
            "net_size": setup.0.len(),
            "success_rate": rate(records.iter().filter(|r| r.within_eps).count(), n),
            "exact_member_rate": rate(records.iter().filter(|r| r.exact_member).count(), n),
            "max_trace_distance": records.iter().map(|r| r.trace_distance).fold(0.0, f64::max),
            "chain_bound": setup.2.chain_bound(),
            "max_chain_value": records.iter().map(|r| r.chain_value).fold(0.0, f64::max),
            "samples_per_trial": records[0].samples,
        }),
        findings: Findings { promise_violations: 0, verification_violations: chain_failures },
        records: to_values(&records)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsCertRecord {
    pub trial: usize,
    pub beta: f64,
    pub verdict: Verdict,
    pub max_gap: f64,
    pub witness: PauliString,
    pub far_threshold: f64,
    pub trace_distance: f64,
    pub promise: PromiseStatus,
    pub correct: Option<bool>,
    pub samples_per_state: u64,
    /// Degenerate arm only: whether the distance is at most `eps/2`.
    pub degenerate_bound_holds: Option<bool>,
}

/// Hamiltonians and temperature for one certification trial.
pub fn gibbs_cert_instance<R: Rng + ?Sized>(
    p: &GibbsCertParams,
    rng: &mut R,
) -> Result<(LocalHamiltonian, LocalHamiltonian, f64)> {
    let random = |rng: &mut R| random_hamiltonian_with(p.n, p.k, rng, &CoefficientLaw::Uniform);
    Ok(match p.arm {
        GibbsArm::Equal => {
            let h = random(rng)?;
            (h.clone(), h, p.beta)
        }
        GibbsArm::Flip => {
            let terms: Vec<(PauliString, f64)> = (0..p.n)
                .map(|q| {
                    let a: f64 = rng.random_range(0.5..=1.0);
                    let s = if rng.random::<bool>() { a } else { -a };
                    Ok((PauliString::single(p.n, q, Letter::Z)?, s))
                })
                .collect::<Result<_>>()?;
            let h = LocalHamiltonian::from_terms(p.n, p.k, terms.iter().copied())?;
            let h0 = LocalHamiltonian::from_terms(p.n, p.k, terms.iter().map(|(q, v)| (*q, -v)))?;
            (h, h0, p.beta)
        }
        GibbsArm::Random => (random(rng)?, random(rng)?, p.beta),
        GibbsArm::Degenerate => {
            let edge = p.eps / (800.0 * (p.n as f64).powi(p.k as i32));
            let beta = edge * (1.0 - rng.random::<f64>());
            (random(rng)?, random(rng)?, beta)
        }
    })
}

pub fn gibbs_cert_trial<R: Rng + ?Sized>(trial: usize, p: &GibbsCertParams, rng: &mut R) -> Result<GibbsCertRecord> {
    let (h, h0, beta) = gibbs_cert_instance(p, rng)?;
    let rho = gibbs_matrix(&h, beta)?;
    let rho0 = gibbs_matrix(&h0, beta)?;
    let cfg = GibbsCertConfig::new(p.n, p.k, p.eps, p.delta, beta);
    let degenerate_bound_holds = (p.arm == GibbsArm::Degenerate).then(|| -> Result<bool> {
        Ok(cfg.degenerate() && trace_distance(&rho, &rho0)? <= p.eps / 2.0)
    });
    let degenerate_bound_holds = degenerate_bound_holds.transpose()?;
    let reference = if p.known_reference { Reference::Known(&rho0) } else { Reference::Unknown(&rho0) };
    let mut report = certify_gibbs(&rho, reference, &cfg, rng)?;
    report.attach_oracle(&rho, &rho0)?;
    let o = report.oracle.clone().expect("oracle attached");
    Ok(GibbsCertRecord {
        trial,
        beta,
        verdict: report.verdict,
        max_gap: report.max_gap,
        witness: report.witness,
        far_threshold: report.thresholds.far_threshold,
        trace_distance: o.trace_distance,
        promise: o.promise,
        correct: o.correct,
        samples_per_state: report.samples_per_state,
        degenerate_bound_holds,
    })
}

fn run_gibbs_cert(config: &RunConfig, p: &GibbsCertParams) -> Result<TaskOutput> {
    let records = run_trials(config, |i, rng| gibbs_cert_trial(i, p, rng))?;
    let expected = match p.arm {
        GibbsArm::Equal => Some(PromiseStatus::Close),
        GibbsArm::Flip => Some(PromiseStatus::Far),
        GibbsArm::Random | GibbsArm::Degenerate => None,
    };
    let promise_violations = expected.map_or(0, |e| records.iter().filter(|r| r.promise != e).count());
    let verification_violations = records.iter().filter(|r| r.degenerate_bound_holds == Some(false)).count();
    let judged: Vec<bool> = records.iter().filter_map(|r| r.correct).collect();
    let n = records.len();
    Ok(TaskOutput {
        summary: json!({
            "trials": n,
            "close_rate": rate(records.iter().filter(|r| r.verdict == Verdict::Close).count(), n),
            "far_rate": rate(records.iter().filter(|r| r.verdict == Verdict::Far).count(), n),
            "judged": judged.len(),
            "error_rate": rate(judged.iter().filter(|c| !**c).count(), judged.len()),
            "samples_per_state": records[0].samples_per_state,
            "max_trace_distance": records.iter().map(|r| r.trace_distance).fold(0.0, f64::max),
        }),
        findings: Findings { promise_violations, verification_violations },
        records: to_values(&records)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BonamiRecord {
    pub trial: usize,
    pub n: usize,
    pub frobenius: f64,
    /// `min_l (l^{k/2} ||H||_F - moment_l)`.
    pub min_slack: f64,
    pub worst_l: u32,
}

pub fn bonami_trial<R: Rng + ?Sized>(trial: usize, p: &BonamiParams, rng: &mut R) -> Result<BonamiRecord> {
    let n = rng.random_range(p.k.max(1)..=p.max_n);
    let h = random_hamiltonian_with(n, p.k, rng, &CoefficientLaw::Uniform)?;
    let f = h.frobenius_norm();
    let mut rec = BonamiRecord { trial, n, frobenius: f, min_slack: f64::INFINITY, worst_l: p.l_min };
    for l in p.l_min..=p.l_max {
        let slack = bonami_factor(l, p.k) * f - schatten_moment(&h, l)?;
        if slack < rec.min_slack {
            rec.min_slack = slack;
            rec.worst_l = l;
        }
    }
    Ok(rec)
}

fn run_bonami(config: &RunConfig, p: &BonamiParams) -> Result<TaskOutput> {
    if p.l_min < 2 || p.l_max < p.l_min || p.k == 0 || p.k > p.max_n {
        return Err(invalid("verify-bonami needs 2 <= l_min <= l_max and 1 <= k <= max_n"));
    }
    let records = run_trials(config, |i, rng| bonami_trial(i, p, rng))?;
    let violations = records.iter().filter(|r| r.min_slack < -p.tol).count();
    Ok(TaskOutput {
        summary: json!({
            "trials": records.len(),
            "violations": violations,
            "min_slack": records.iter().map(|r| r.min_slack).fold(f64::INFINITY, f64::min),
        }),
        findings: Findings { promise_violations: 0, verification_violations: violations },
        records: to_values(&records)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsRecord {
    pub trial: usize,
    pub n: usize,
    pub beta: f64,
    pub lhs: f64,
    pub relative_entropy: f64,
    pub coefficient: f64,
    pub moment: f64,
    pub min_slack: f64,
}

pub fn bounds_trial<R: Rng + ?Sized>(trial: usize, p: &BoundsParams, rng: &mut R) -> Result<BoundsRecord> {
    let n = rng.random_range(1..=p.max_n);
    let k = p.k.min(n);
    let beta = p.beta_max * (1.0 - rng.random::<f64>());
    let h = random_hamiltonian_with(n, k, rng, &CoefficientLaw::Uniform)?;
    let h0 = random_hamiltonian_with(n, k, rng, &CoefficientLaw::Uniform)?;
    let g = pinsker_gap(&gibbs_matrix(&h, beta)?, &gibbs_matrix(&h0, beta)?, &h, &h0, beta)?;
    Ok(BoundsRecord {
        trial,
        n,
        beta,
        lhs: g.lhs,
        relative_entropy: g.relative_entropy,
        coefficient: g.coefficient,
        moment: g.moment,
        min_slack: g.slacks().into_iter().fold(f64::INFINITY, f64::min),
    })
}

fn run_bounds(config: &RunConfig, p: &BoundsParams) -> Result<TaskOutput> {
    if p.max_n == 0 || p.k == 0 || !(p.beta_max > 0.0) {
        return Err(invalid("verify-bounds needs max_n, k >= 1 and beta_max > 0"));
    }
    let records = run_trials(config, |i, rng| bounds_trial(i, p, rng))?;
    let violations = records.iter().filter(|r| r.min_slack < -p.tol).count();
    Ok(TaskOutput {
        summary: json!({
            "trials": records.len(),
            "violations": violations,
            "min_slack": records.iter().map(|r| r.min_slack).fold(f64::INFINITY, f64::min),
        }),
        findings: Findings { promise_violations: 0, verification_violations: violations },
        records: to_values(&records)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadowRecord {
    pub trial: usize,
    pub samples: u64,
    pub batches: usize,
    pub mom_max_error: f64,
    pub mean_max_error: f64,
    pub mom_covered: bool,
    pub mean_covered: bool,
}

/// The shared state of a shadow run: Gibbs state of a random `k`-local Hamiltonian.
pub fn shadow_state(p: &ShadowParams, seed: u64) -> Result<DenseOperator> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.hamiltonian_seed.unwrap_or(seed));
    let h = random_hamiltonian_with(p.n, p.k, &mut rng, &CoefficientLaw::Uniform)?;
    gibbs_matrix(&h, p.beta)
}

pub fn shadow_trial<R: Rng + ?Sized>(
    trial: usize,
    p: &ShadowParams,
    rho: &DenseOperator,
    exact: &ShadowEstimates,
    rng: &mut R,
) -> Result<ShadowRecord> {
    let samples = shadow_budget_with(p.c_s, p.n, p.k, p.eps, p.delta)?;
    let batches = batch_count(p.n, p.k, p.delta).min(samples as usize);
    let table = ShadowTable::sample(rho, samples, batches, rng)?;
    let mom = table.estimate_all(p.k, Combine::MedianOfMeans)?.max_gap(exact);
    let mean = table.estimate_all(p.k, Combine::Mean)?.max_gap(exact);
    Ok(ShadowRecord {
        trial,
        samples,
        batches,
        mom_max_error: mom,
        mean_max_error: mean,
        mom_covered: mom <= p.eps,
        mean_covered: mean <= p.eps,
    })
}

fn run_shadows(config: &RunConfig, p: &ShadowParams) -> Result<TaskOutput> {
    if let Some(path) = &p.dataset {
        return replay_shadows(p, path);
    }
    let rho = shadow_state(p, config.seed)?;
    let exact = ShadowEstimates::exact(&rho, p.k)?;
    let records = run_trials(config, |i, rng| shadow_trial(i, p, &rho, &exact, rng))?;
    if p.write_dataset {
        let dir = resolve_out_dir(None, config);
        fs::create_dir_all(&dir)?;
        let mut rng = trial_rng(config.seed, config.trials);
        let samples = collect_shadows(&rho, records[0].samples, &mut rng)?;
        fs::write(dir.join("shadows.txt"), write_dataset(p.n, &samples))?;
    }
    let n = records.len();
    let mom = records.iter().filter(|r| r.mom_covered).count();
    let mean = records.iter().filter(|r| r.mean_covered).count();
    Ok(TaskOutput {
        summary: json!({
            "trials": n,
            "samples": records[0].samples,
            "batches": records[0].batches,
            "mom_coverage": rate(mom, n),
            "mean_coverage": rate(mean, n),
            "mom_not_worse": mom >= mean,
            "max_error": records.iter().map(|r| r.mom_max_error).fold(0.0, f64::max),
        }),
        findings: Findings::default(),
        records: to_values(&records)?,
    })
}

fn replay_shadows(p: &ShadowParams, path: &Path) -> Result<TaskOutput> {
    let (n, samples) = read_dataset(&fs::read_to_string(path)?)?;
    let batches = batch_count(n, p.k, p.delta).min(samples.len());
    let table = ShadowTable::from_samples(n, &samples, batches)?;
    let est = table.estimate_all(p.k, Combine::MedianOfMeans)?;
    let records: Vec<Value> = enumerate_local_paulis(n, p.k, true)?
        .iter()
        .map(|q| json!({ "pauli": q.to_string(), "weight": q.weight(), "estimate": est.get(q) }))
        .collect();
    Ok(TaskOutput {
        summary: json!({ "dataset": path, "n": n, "samples": samples.len(), "batches": batches }),
        findings: Findings::default(),
        records,
    })
}

//! Classical shadows from random single-qubit Pauli measurements: sampling,
//! count tables, median-of-means estimates of every `Tr[P rho]` with
//! `|P| <= k`, and the linear net observables built from them.
//!
//! Basis words are indexed in base 3 with qubit 0 as the most significant
//! digit (`X = 0, Y = 1, Z = 2`). Outcome words are bit masks with qubit `q`
//! at bit `n-1-q`; a set bit is the `-1` eigenvalue.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Binomial;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{qubits_for_dimension, DenseOperator};
use crate::net::HamiltonianNet;
use crate::pauli::{check_qubits, enumerate_local_paulis, Letter, PauliString};

/// Multiplier in [`shadow_budget`], found on the shadow calibration corpus.
pub const SHADOW_CONSTANT: f64 = 2.0;

/// Largest qubit count handled by the shadow tables.
pub const MAX_SHADOW_QUBITS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShadowSample {
    /// Measurement letter per qubit; never `I`.
    pub basis: PauliString,
    pub outcomes: u32,
}

fn basis_masks(n: usize, word: usize) -> (u32, u32) {
    let (mut x, mut z) = (0u32, 0u32);
    let mut rest = word;
    for q in (0..n).rev() {
        let bit = 1 << (n - 1 - q);
        match rest % 3 {
            0 => x |= bit,
            1 => {
                x |= bit;
                z |= bit
            }
            _ => z |= bit,
        }
        rest /= 3;
    }
    (x, z)
}

fn basis_index(p: &PauliString) -> Result<usize> {
    p.letters().try_fold(0usize, |acc, l| {
        let digit = match l {
            Letter::X => 0,
            Letter::Y => 1,
            Letter::Z => 2,
            Letter::I => return Err(invalid(format!("basis word {p} contains I"))),
        };
        Ok(acc * 3 + digit)
    })
}

fn word_count(n: usize) -> usize {
    3usize.pow(n as u32)
}

/// `Tr[P rho]` for every Pauli string, indexed by `x | z << n`.
fn all_expectations(rho: &DenseOperator) -> Result<Vec<f64>> {
    let n = qubits_for_dimension(rho.nrows())?;
    let mut out = vec![0.0; 1 << (2 * n)];
    for p in enumerate_local_paulis(n, n, true)? {
        out[(p.x_mask() | (p.z_mask() << n)) as usize] = p.trace_product(rho).re;
    }
    Ok(out)
}

/// `table[w * 2^n + o]` = probability of outcome `o` when measuring basis word `w`.
pub fn outcome_table(rho: &DenseOperator) -> Result<Vec<f64>> {
    let n = qubits_for_dimension(rho.nrows())?;
    if n > MAX_SHADOW_QUBITS {
        return Err(Error::QubitCount(n));
    }
    let expect = all_expectations(rho)?;
    let d = 1usize << n;
    let mut table = vec![0.0; word_count(n) * d];
    for w in 0..word_count(n) {
        let (wx, wz) = basis_masks(n, w);
        for o in 0..d {
            let mut p = 0.0;
            for s in 0..d as u32 {
                let sign = if (s & o as u32).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
                p += sign * expect[((s & wx) | ((s & wz) << n)) as usize];
            }
            table[w * d + o] = (p / d as f64).max(0.0);
        }
    }
    Ok(table)
}

/// Draws `m` independent single-copy measurements of `rho`, each in a
/// uniformly random basis word.
pub fn collect_shadows<R: Rng + ?Sized>(rho: &DenseOperator, m: u64, rng: &mut R) -> Result<Vec<ShadowSample>> {
    if m == 0 {
        return Err(invalid("sample count must be >= 1"));
    }
    let n = qubits_for_dimension(rho.nrows())?;
    let d = 1usize << n;
    let table = outcome_table(rho)?;
    let samplers = (0..word_count(n))
        .map(|w| WeightedIndex::new(&table[w * d..(w + 1) * d]).map_err(|e| invalid(format!("outcome law: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    (0..m)
        .map(|_| {
            let w = rng.random_range(0..word_count(n));
            let (x, z) = basis_masks(n, w);
            Ok(ShadowSample { basis: PauliString::from_masks(n, x, z)?, outcomes: samplers[w].sample(rng) as u32 })
        })
        .collect()
}

/// Batched count tables over (basis word, outcome) cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadowTable {
    pub n: usize,
    pub batches: Vec<Vec<u64>>,
}

/// Sizes of `batches` contiguous batches covering `m` samples.
fn batch_sizes(m: u64, batches: usize) -> Vec<u64> {
    let b = batches as u64;
    (0..b).map(|i| m / b + u64::from(i < m % b)).collect()
}

impl ShadowTable {
    pub fn from_samples(n: usize, samples: &[ShadowSample], batches: usize) -> Result<Self> {
        check_qubits(n)?;
        if samples.is_empty() {
            return Err(invalid("no shadow samples"));
        }
        if batches == 0 || batches > samples.len() {
            return Err(invalid(format!("{batches} batches for {} samples", samples.len())));
        }
        let d = 1usize << n;
        let mut out = Vec::with_capacity(batches);
        let mut start = 0usize;
        for size in batch_sizes(samples.len() as u64, batches) {
            let mut counts = vec![0u64; word_count(n) * d];
            for s in &samples[start..start + size as usize] {
                if s.basis.num_qubits() != n {
                    return Err(Error::QubitMismatch { left: n, right: s.basis.num_qubits() });
                }
                counts[basis_index(&s.basis)? * d + s.outcomes as usize] += 1;
            }
            start += size as usize;
            out.push(counts);
        }
        Ok(Self { n, batches: out })
    }

    /// Count tables with the exact multinomial law of `m` single-copy
    /// measurements, drawn cell by cell as conditional binomials.
    pub fn sample<R: Rng + ?Sized>(rho: &DenseOperator, m: u64, batches: usize, rng: &mut R) -> Result<Self> {
        let n = qubits_for_dimension(rho.nrows())?;
        if batches == 0 || (batches as u64) > m {
            return Err(invalid(format!("{batches} batches for {m} samples")));
        }
        let table = outcome_table(rho)?;
        let words = word_count(n) as f64;
        let cells: Vec<f64> = table.iter().map(|p| p / words).collect();
        let mut out = Vec::with_capacity(batches);
        for size in batch_sizes(m, batches) {
            let mut remaining = size;
            let mut mass: f64 = cells.iter().sum();
            let mut counts = vec![0u64; cells.len()];
            for (c, &p) in counts.iter_mut().zip(&cells) {
                if remaining == 0 {
                    break;
                }
                let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 1.0 };
                let draw = Binomial::new(remaining, q).map_err(|e| invalid(format!("binomial law: {e}")))?.sample(rng);
                *c = draw;
                remaining -= draw;
                mass -= p;
            }
            // Rounding can leave mass behind; the last positive cell absorbs it.
            if remaining > 0 {
                let last = cells.iter().rposition(|&p| p > 0.0).unwrap_or(cells.len() - 1);
                counts[last] += remaining;
            }
            out.push(counts);
        }
        Ok(Self { n, batches: out })
    }

    pub fn total_samples(&self) -> u64 {
        self.batches.iter().map(|b| b.iter().sum::<u64>()).sum()
    }

    fn batch_mean(&self, batch: &[u64], p: &PauliString) -> f64 {
        let n = self.n;
        let d = 1usize << n;
        let support = p.x_mask() | p.z_mask();
        let scale = 3f64.powi(p.weight() as i32);
        let size: u64 = batch.iter().sum();
        let mut acc = 0.0;
        for w in 0..word_count(n) {
            let (wx, wz) = basis_masks(n, w);
            if wx & support != p.x_mask() || wz & support != p.z_mask() {
                continue;
            }
            for o in 0..d {
                let c = batch[w * d + o];
                if c > 0 {
                    let sign = if (o as u32 & support).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
                    acc += sign * c as f64;
                }
            }
        }
        scale * acc / size as f64
    }

    /// Per-batch means of the single-sample estimator of `Tr[P rho]`.
    pub fn batch_means(&self, p: &PauliString) -> Result<Vec<f64>> {
        if p.num_qubits() != self.n {
            return Err(Error::QubitMismatch { left: self.n, right: p.num_qubits() });
        }
        Ok(self.batches.iter().map(|b| self.batch_mean(b, p)).collect())
    }

    pub fn median_of_means(&self, p: &PauliString) -> Result<f64> {
        if p.is_identity() {
            return Ok(1.0);
        }
        Ok(median(self.batch_means(p)?))
    }

    /// Plain mean over all samples.
    pub fn mean(&self, p: &PauliString) -> Result<f64> {
        if p.is_identity() {
            return Ok(1.0);
        }
        let total = self.total_samples() as f64;
        let means = self.batch_means(p)?;
        Ok(self
            .batches
            .iter()
            .zip(means)
            .map(|(b, m)| m * b.iter().sum::<u64>() as f64)
            .sum::<f64>()
            / total)
    }

    pub fn estimate_all(&self, k: usize, combine: Combine) -> Result<ShadowEstimates> {
        let mut estimates = BTreeMap::new();
        for p in enumerate_local_paulis(self.n, k, true)? {
            let v = match combine {
                Combine::MedianOfMeans => self.median_of_means(&p)?,
                Combine::Mean => self.mean(&p)?,
            };
            estimates.insert(p, v);
        }
        Ok(ShadowEstimates { n: self.n, k, samples: self.total_samples(), batches: self.batches.len(), estimates })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# shadow counts: one line per batch, cells ordered by basis word then outcome").unwrap();
        writeln!(s, "n {}", self.n).unwrap();
        for b in &self.batches {
            let row: Vec<String> = b.iter().map(u64::to_string).collect();
            writeln!(s, "{}", row.join(" ")).unwrap();
        }
        s
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        (v[m / 2 - 1] + v[m / 2]) / 2.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combine {
    MedianOfMeans,
    Mean,
}

/// Median-of-means estimate of `Tr[P rho] = 2^n rho_P` from raw samples.
pub fn estimate_pauli(samples: &[ShadowSample], p: &PauliString, batches: usize) -> Result<f64> {
    let n = p.num_qubits();
    ShadowTable::from_samples(n, samples, batches)?.median_of_means(p)
}

/// Estimates of `2^n rho_P = Tr[P rho]` for every `|P| <= k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadowEstimates {
    pub n: usize,
    pub k: usize,
    pub samples: u64,
    pub batches: usize,
    pub estimates: BTreeMap<PauliString, f64>,
}

impl ShadowEstimates {
    /// Exact values in place of estimates.
    pub fn exact(rho: &DenseOperator, k: usize) -> Result<Self> {
        let n = qubits_for_dimension(rho.nrows())?;
        let estimates = enumerate_local_paulis(n, k, true)?
            .into_iter()
            .map(|p| {
                let v = if p.is_identity() { 1.0 } else { p.trace_product(rho).re };
                (p, v)
            })
            .collect();
        Ok(Self { n, k, samples: 0, batches: 0, estimates })
    }

    pub fn get(&self, p: &PauliString) -> Option<f64> {
        self.estimates.get(p).copied()
    }

    /// `max_P |self_P - other_P|` over the common strings.
    pub fn max_gap(&self, other: &ShadowEstimates) -> f64 {
        self.estimates
            .iter()
            .filter_map(|(p, v)| other.get(p).map(|w| (v - w).abs()))
            .fold(0.0, f64::max)
    }
}

/// Number of median-of-means batches: `2 ceil(ln(2 * 100 n^k / delta))`.
pub fn batch_count(n: usize, k: usize, delta: f64) -> usize {
    2 * (2.0 * 100.0 * (n as f64).powi(k as i32) / delta).ln().ceil().max(1.0) as usize
}

/// `ceil(c_s 3^k k ln(100 n^k / delta) / eps^2)`.
pub fn shadow_budget(n: usize, k: usize, eps: f64, delta: f64) -> Result<u64> {
    shadow_budget_with(SHADOW_CONSTANT, n, k, eps, delta)
}

pub fn shadow_budget_with(c_s: f64, n: usize, k: usize, eps: f64, delta: f64) -> Result<u64> {
    if !(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("shadow accuracy {eps} and confidence {delta} must lie in (0, 1)")));
    }
    let k_eff = k.max(1) as f64;
    let m = (c_s * 3f64.powi(k as i32) * k_eff * (100.0 * (n as f64).powi(k as i32) / delta).ln() / (eps * eps)).ceil();
    if m >= u64::MAX as f64 {
        return Err(Error::Budget { what: "shadow samples", needed: m, budget: u64::MAX as f64 });
    }
    Ok(m.max(1.0) as u64)
}

/// `Tr[H_i rho]` estimated for every net member `i`; the pairwise
/// observable is `pair(i, j) = value_i - value_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetObservables {
    pub values: Vec<f64>,
}

impl NetObservables {
    pub fn pair(&self, i: usize, j: usize) -> f64 {
        self.values[i] - self.values[j]
    }
}

pub fn estimate_net_observables(est: &ShadowEstimates, net: &HamiltonianNet) -> Result<NetObservables> {
    let coeffs: Vec<f64> = net
        .support()
        .iter()
        .map(|p| est.get(p).ok_or_else(|| invalid(format!("no estimate for {p}"))))
        .collect::<Result<_>>()?;
    let values = (0..net.len())
        .map(|i| net.coefficients(i).iter().zip(&coeffs).map(|(h, e)| h * e).sum())
        .collect();
    Ok(NetObservables { values })
}

/// Outcome of repeated shadow runs against the exact coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageRun {
    pub samples: u64,
    pub batches: usize,
    /// Per repetition: max per-Pauli error for median-of-means and plain mean.
    pub mom_errors: Vec<f64>,
    pub mean_errors: Vec<f64>,
}

impl CoverageRun {
    pub fn mom_successes(&self, eps: f64) -> usize {
        self.mom_errors.iter().filter(|&&e| e <= eps).count()
    }

    pub fn mean_successes(&self, eps: f64) -> usize {
        self.mean_errors.iter().filter(|&&e| e <= eps).count()
    }
}

/// Runs `reps` independent shadow estimations of `rho` with budget constant
/// `c_s` and records the worst per-Pauli error of each.
pub fn shadow_coverage<R: Rng + ?Sized>(
    rho: &DenseOperator,
    k: usize,
    eps: f64,
    delta: f64,
    c_s: f64,
    reps: usize,
    rng: &mut R,
) -> Result<CoverageRun> {
    let n = qubits_for_dimension(rho.nrows())?;
    let samples = shadow_budget_with(c_s, n, k, eps, delta)?;
    let batches = batch_count(n, k, delta).min(samples as usize);
    let exact = ShadowEstimates::exact(rho, k)?;
    let mut mom_errors = Vec::with_capacity(reps);
    let mut mean_errors = Vec::with_capacity(reps);
    for _ in 0..reps {
        let table = ShadowTable::sample(rho, samples, batches, rng)?;
        mom_errors.push(table.estimate_all(k, Combine::MedianOfMeans)?.max_gap(&exact));
        mean_errors.push(table.estimate_all(k, Combine::Mean)?.max_gap(&exact));
    }
    Ok(CoverageRun { samples, batches, mom_errors, mean_errors })
}

/// Dataset text: `n N` header, then one `BASIS OUTCOMES` line per sample,
/// outcomes written as `+`/`-` per qubit.
pub fn write_dataset(n: usize, samples: &[ShadowSample]) -> String {
    let mut s = String::new();
    writeln!(s, "n {n}").unwrap();
    for smp in samples {
        let outcomes: String = (0..n)
            .map(|q| if (smp.outcomes >> (n - 1 - q)) & 1 == 1 { '-' } else { '+' })
            .collect();
        writeln!(s, "{} {outcomes}", smp.basis).unwrap();
    }
    s
}

pub fn read_dataset(text: &str) -> Result<(usize, Vec<ShadowSample>)> {
    let mut n = None;
    let mut samples = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let mut parts = line.split_whitespace();
        let (a, b) = (parts.next(), parts.next());
        if parts.next().is_some() {
            return Err(err("expected two fields".into()));
        }
        match (n, a, b) {
            (None, Some("n"), Some(v)) => {
                let q: usize = v.parse().map_err(|_| err(format!("bad qubit count {v:?}")))?;
                check_qubits(q).map_err(|e| err(e.to_string()))?;
                n = Some(q);
            }
            (None, _, _) => return Err(err("missing `n` header".into())),
            (Some(q), Some(word), Some(out)) => {
                let basis: PauliString = word.parse().map_err(|e: Error| err(e.to_string()))?;
                if basis.num_qubits() != q || basis.weight() != q {
                    return Err(err(format!("basis {word:?} must have {q} non-identity letters")));
                }
                if out.len() != q {
                    return Err(err(format!("outcome {out:?} must have {q} symbols")));
                }
                let mut outcomes = 0u32;
                for (k, c) in out.chars().enumerate() {
                    match c {
                        '+' => {}
                        '-' => outcomes |= 1 << (q - 1 - k),
                        _ => return Err(err(format!("outcome symbol {c:?}"))),
                    }
                }
                samples.push(ShadowSample { basis, outcomes });
            }
            _ => return Err(err("expected `BASIS OUTCOMES`".into())),
        }
    }
    let n = n.ok_or_else(|| invalid("empty dataset"))?;
    Ok((n, samples))
}

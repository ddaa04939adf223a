//! Local Hamiltonians as sparse real Pauli sums, their Gibbs states, and a
//! seeded generator for test corpora.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Deref;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{DenseOperator, HermitianEigen};
use crate::pauli::{check_qubits, enumerate_local_paulis, PauliString};

/// A Hermitian operator `sum_P c_P P` with real coefficients and no other constraint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliSum {
    n: usize,
    coeffs: BTreeMap<PauliString, f64>,
}

impl PauliSum {
    pub fn zero(n: usize) -> Result<Self> {
        check_qubits(n)?;
        Ok(Self { n, coeffs: BTreeMap::new() })
    }

    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, f64)>,
    {
        let mut s = Self::zero(n)?;
        for (p, v) in terms {
            s.add_term(p, v)?;
        }
        Ok(s)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> usize {
        1 << self.n
    }

    /// Adds `value * P`; entries that cancel to exactly zero are dropped.
    pub fn add_term(&mut self, p: PauliString, value: f64) -> Result<()> {
        if p.num_qubits() != self.n {
            return Err(Error::QubitMismatch { left: self.n, right: p.num_qubits() });
        }
        if !value.is_finite() {
            return Err(invalid(format!("non-finite coefficient for {p}")));
        }
        let entry = self.coeffs.entry(p).or_insert(0.0);
        *entry += value;
        if *entry == 0.0 {
            self.coeffs.remove(&p);
        }
        Ok(())
    }

    pub fn coeff(&self, p: &PauliString) -> f64 {
        self.coeffs.get(p).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (PauliString, f64)> + '_ {
        self.coeffs.iter().map(|(p, v)| (*p, *v))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn max_weight(&self) -> usize {
        self.coeffs.keys().map(|p| p.weight()).max().unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.values().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.values().map(|v| v.abs()).sum()
    }

    /// Normalized Frobenius norm via Parseval, `sqrt(sum_P c_P^2)`.
    pub fn frobenius_norm(&self) -> f64 {
        self.coeffs.values().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_matrix(&self) -> DenseOperator {
        let d = self.dimension();
        let mut m = DMatrix::zeros(d, d);
        for (p, &v) in &self.coeffs {
            for b in 0..d {
                let (r, ph) = p.apply_to_basis(b);
                m[(r, b)] += ph * v;
            }
        }
        m
    }

    pub fn eigen(&self) -> HermitianEigen {
        HermitianEigen::new(&self.to_matrix())
    }

    /// Largest absolute eigenvalue of the dense matrix.
    pub fn operator_norm(&self) -> f64 {
        self.eigen().max_abs()
    }

    pub fn scaled(&self, factor: f64) -> PauliSum {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(p, v)| (*p, v * factor))
            .filter(|(_, v)| *v != 0.0)
            .collect();
        PauliSum { n: self.n, coeffs }
    }

    /// `self - other`.
    pub fn minus(&self, other: &PauliSum) -> Result<PauliSum> {
        let mut out = self.clone();
        for (p, v) in other.terms() {
            out.add_term(p, -v)?;
        }
        Ok(out)
    }

    /// `self + other`.
    pub fn plus(&self, other: &PauliSum) -> Result<PauliSum> {
        let mut out = self.clone();
        for (p, v) in other.terms() {
            out.add_term(p, v)?;
        }
        Ok(out)
    }

    /// `max_P |c_P - c'_P|`.
    pub fn max_coeff_gap(&self, other: &PauliSum) -> f64 {
        let keys: std::collections::BTreeSet<_> = self.coeffs.keys().chain(other.coeffs.keys()).collect();
        keys.into_iter()
            .map(|p| (self.coeff(p) - other.coeff(p)).abs())
            .fold(0.0, f64::max)
    }
}

/// A traceless `k`-local Hamiltonian with coefficients in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HamiltonianRepr", into = "HamiltonianRepr")]
pub struct LocalHamiltonian {
    k: usize,
    sum: PauliSum,
}

#[derive(Serialize, Deserialize)]
struct HamiltonianRepr {
    n: usize,
    k: usize,
    terms: BTreeMap<PauliString, f64>,
}

impl TryFrom<HamiltonianRepr> for LocalHamiltonian {
    type Error = Error;

    fn try_from(r: HamiltonianRepr) -> Result<Self> {
        LocalHamiltonian::from_terms(r.n, r.k, r.terms)
    }
}

impl From<LocalHamiltonian> for HamiltonianRepr {
    fn from(h: LocalHamiltonian) -> Self {
        HamiltonianRepr { n: h.sum.n, k: h.k, terms: h.sum.coeffs }
    }
}

impl Deref for LocalHamiltonian {
    type Target = PauliSum;

    fn deref(&self) -> &PauliSum {
        &self.sum
    }
}

impl AsRef<PauliSum> for LocalHamiltonian {
    fn as_ref(&self) -> &PauliSum {
        &self.sum
    }
}

impl LocalHamiltonian {
    pub fn zero(n: usize, k: usize) -> Result<Self> {
        check_qubits(n)?;
        if k > n {
            return Err(Error::Locality { n, k });
        }
        Ok(Self { k, sum: PauliSum::zero(n)? })
    }

    pub fn from_terms<I>(n: usize, k: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, f64)>,
    {
        let mut h = Self::zero(n, k)?;
        for (p, v) in terms {
            h.set(p, v)?;
        }
        Ok(h)
    }

    /// Parses `(word, coefficient)` pairs, e.g. `[("XI", 0.5), ("ZZ", -0.2)]`.
    pub fn from_words(n: usize, k: usize, terms: &[(&str, f64)]) -> Result<Self> {
        let parsed = terms
            .iter()
            .map(|(w, v)| Ok((w.parse::<PauliString>()?, *v)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_terms(n, k, parsed)
    }

    /// Wraps a Pauli sum after checking every invariant.
    pub fn from_sum(k: usize, sum: PauliSum) -> Result<Self> {
        let n = sum.num_qubits();
        Self::from_terms(n, k, sum.terms())
    }

    /// Sets `h_P`, rejecting the identity, weight above `k`, and `|value| > 1`.
    pub fn set(&mut self, p: PauliString, value: f64) -> Result<()> {
        if p.is_identity() {
            return Err(invalid("Hamiltonians are traceless; identity coefficient must be 0"));
        }
        if p.weight() > self.k {
            return Err(invalid(format!("{p} has weight {} > k = {}", p.weight(), self.k)));
        }
        if !(value.abs() <= 1.0) {
            return Err(invalid(format!("coefficient {value} of {p} outside [-1, 1]")));
        }
        if p.num_qubits() != self.sum.n {
            return Err(Error::QubitMismatch { left: self.sum.n, right: p.num_qubits() });
        }
        if value == 0.0 {
            self.sum.coeffs.remove(&p);
        } else {
            self.sum.coeffs.insert(p, value);
        }
        Ok(())
    }

    pub fn locality(&self) -> usize {
        self.k
    }

    pub fn as_sum(&self) -> &PauliSum {
        &self.sum
    }

    pub fn into_sum(self) -> PauliSum {
        self.sum
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# local Hamiltonian: n, k, then one `word coefficient` line per term");
        let _ = writeln!(out, "n {}", self.sum.n);
        let _ = writeln!(out, "k {}", self.k);
        for (p, v) in self.sum.terms() {
            let _ = writeln!(out, "{p} {v:.16e}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut n = None;
        let mut k = None;
        let mut terms = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: line_no, msg };
            let mut fields = line.split_whitespace();
            let (Some(key), Some(value), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(parse_err(format!("expected two fields, got {line:?}")));
            };
            match key {
                "n" => n = Some(value.parse::<usize>().map_err(|e| parse_err(e.to_string()))?),
                "k" => k = Some(value.parse::<usize>().map_err(|e| parse_err(e.to_string()))?),
                word => {
                    let p = word.parse::<PauliString>().map_err(|e| parse_err(e.to_string()))?;
                    let v = value.parse::<f64>().map_err(|e| parse_err(e.to_string()))?;
                    terms.push((line_no, p, v));
                }
            }
        }
        let n = n.ok_or_else(|| Error::Parse { line: 0, msg: "missing `n` line".into() })?;
        let k = k.ok_or_else(|| Error::Parse { line: 0, msg: "missing `k` line".into() })?;
        let mut h = Self::zero(n, k)?;
        for (line, p, v) in terms {
            if h.sum.coeffs.contains_key(&p) {
                return Err(Error::Parse { line, msg: format!("duplicate term {p}") });
            }
            h.set(p, v).map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        }
        Ok(h)
    }
}

impl FromStr for LocalHamiltonian {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_text(s)
    }
}

/// `exp(-beta H) / Tr[exp(-beta H)]` for any real Pauli sum.
pub fn gibbs_matrix(h: &PauliSum, beta: f64) -> Result<DenseOperator> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(invalid(format!("inverse temperature {beta} must be finite and >= 0")));
    }
    let eig = h.eigen();
    let shift = eig.min();
    let z: f64 = eig.values.iter().map(|v| (-beta * (v - shift)).exp()).sum();
    let mut rho = eig.map(|v| Complex64::new((-beta * (v - shift)).exp() / z, 0.0));
    // Exact Hermitian symmetry.
    rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(rho)
}

/// The thermal state of a local Hamiltonian.
#[derive(Clone, Debug)]
pub struct GibbsState {
    pub beta: f64,
    pub source: LocalHamiltonian,
    pub rho: DenseOperator,
}

impl GibbsState {
    pub fn num_qubits(&self) -> usize {
        self.source.num_qubits()
    }

    /// `Tr[P rho] = 2^n rho_P`.
    pub fn pauli_expectation(&self, p: &PauliString) -> f64 {
        p.trace_product(&self.rho).re
    }
}

pub fn gibbs(h: &LocalHamiltonian, beta: f64) -> Result<GibbsState> {
    Ok(GibbsState { beta, source: h.clone(), rho: gibbs_matrix(h, beta)? })
}

/// How random test Hamiltonians draw their coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum CoefficientLaw {
    /// Every non-identity string of weight `<= k` gets `U[-1, 1]`.
    Uniform,
    /// Exactly `support` strings chosen uniformly, each with a nonzero `U[-1, 1]` value.
    Sparse { support: usize },
    /// Uniform draw rescaled to the target Frobenius norm.
    FixedNorm { target: f64 },
}

pub fn random_hamiltonian(n: usize, k: usize, seed: u64, law: &CoefficientLaw) -> Result<LocalHamiltonian> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_hamiltonian_with(n, k, &mut rng, law)
}

pub fn random_hamiltonian_with<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    rng: &mut R,
    law: &CoefficientLaw,
) -> Result<LocalHamiltonian> {
    let paulis = {
        check_qubits(n)?;
        if k > n {
            return Err(Error::Locality { n, k });
        }
        enumerate_local_paulis(n, k, false)?
    };
    let nonzero = |rng: &mut R| loop {
        let v: f64 = rng.random_range(-1.0..=1.0);
        if v != 0.0 {
            return v;
        }
    };
    let terms: Vec<(PauliString, f64)> = match law {
        CoefficientLaw::Uniform => paulis.iter().map(|p| (*p, nonzero(rng))).collect(),
        CoefficientLaw::Sparse { support } => {
            if *support > paulis.len() {
                return Err(invalid(format!(
                    "support {support} exceeds the {} available strings",
                    paulis.len()
                )));
            }
            let mut idx = sample(rng, paulis.len(), *support).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| (paulis[i], nonzero(rng))).collect()
        }
        CoefficientLaw::FixedNorm { target } => {
            let values: Vec<f64> = paulis.iter().map(|_| nonzero(rng)).collect();
            let scaled = rescale_to_norm(&values, *target)?;
            paulis.iter().copied().zip(scaled).collect()
        }
    };
    LocalHamiltonian::from_terms(n, k, terms)
}

/// Rescales to an exact l2 norm while keeping every entry in `[-1, 1]`:
/// entries that would overflow are pinned at `+-1` and the rest rescaled.
fn rescale_to_norm(values: &[f64], target: f64) -> Result<Vec<f64>> {
    let terms = values.len();
    if !(target >= 0.0) || target > (terms as f64).sqrt() {
        return Err(Error::UnreachableNorm { target, terms });
    }
    let mut out = values.to_vec();
    let mut pinned = vec![false; terms];
    loop {
        let pinned_sq = pinned.iter().filter(|&&p| p).count() as f64;
        let free_sq: f64 = out.iter().zip(&pinned).filter(|(_, p)| !**p).map(|(v, _)| v * v).sum();
        let remaining = target * target - pinned_sq;
        if free_sq == 0.0 {
            if remaining.abs() > 1e-12 {
                return Err(Error::UnreachableNorm { target, terms });
            }
            return Ok(out);
        }
        let scale = (remaining.max(0.0) / free_sq).sqrt();
        let mut changed = false;
        for (v, p) in out.iter_mut().zip(pinned.iter_mut()) {
            if *p {
                continue;
            }
            if (*v * scale).abs() > 1.0 {
                *v = v.signum();
                *p = true;
                changed = true;
            }
        }
        if !changed {
            for (v, p) in out.iter_mut().zip(&pinned) {
                if !*p {
                    *v *= scale;
                }
            }
            return Ok(out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{is_density_matrix, max_abs, normalized_inner, EXACT_TOL};

    fn h(n: usize, k: usize, terms: &[(&str, f64)]) -> LocalHamiltonian {
        LocalHamiltonian::from_words(n, k, terms).unwrap()
    }

    #[test]
    fn invariants_enforced() {
        let mut x = LocalHamiltonian::zero(2, 1).unwrap();
        assert!(x.set("II".parse().unwrap(), 0.5).is_err());
        assert!(x.set("XX".parse().unwrap(), 0.5).is_err());
        assert!(x.set("XI".parse().unwrap(), 1.5).is_err());
        assert!(x.set("XI".parse().unwrap(), f64::NAN).is_err());
        x.set("XI".parse().unwrap(), -1.0).unwrap();
        assert_eq!(x.len(), 1);
        x.set("XI".parse().unwrap(), 0.0).unwrap();
        assert!(x.is_empty());
        assert!(LocalHamiltonian::zero(2, 3).is_err());
    }

    #[test]
    fn frobenius_examples() {
        assert!((h(1, 1, &[("X", 0.3)]).frobenius_norm() - 0.3).abs() < 1e-15);
        let two = h(2, 1, &[("XI", 0.5), ("IZ", 0.5)]);
        assert!((two.frobenius_norm() - 0.5f64.sqrt()).abs() < 1e-15);
        for seed in 0..20 {
            let r = random_hamiltonian(3, 2, seed, &CoefficientLaw::Uniform).unwrap();
            let m = r.to_matrix();
            let dense = normalized_inner(&m, &m).re.sqrt();
            assert!((r.frobenius_norm() - dense).abs() < 1e-10);
        }
    }

    #[test]
    fn operator_norm_examples() {
        assert!((h(2, 2, &[("ZZ", 1.0)]).operator_norm() - 1.0).abs() < 1e-12);
        assert!((h(1, 1, &[("X", 1.0), ("Z", 1.0)]).operator_norm() - 2f64.sqrt()).abs() < 1e-12);
        for seed in 0..100 {
            let r = random_hamiltonian(1 + (seed as usize % 3), 1 + (seed as usize % 2).min(seed as usize % 3), seed, &CoefficientLaw::Uniform).unwrap();
            assert!(r.operator_norm() <= r.l1_norm() + 1e-12);
        }
    }

    #[test]
    fn gibbs_examples() {
        let z = h(1, 1, &[("Z", 1.0)]);
        let g = gibbs(&z, 1.0).unwrap();
        let e = 1f64.exp();
        let norm = 2.0 * 1f64.cosh();
        assert!((g.rho[(0, 0)].re - 1.0 / e / norm).abs() < 1e-14);
        assert!((g.rho[(1, 1)].re - e / norm).abs() < 1e-14);
        assert!((g.pauli_expectation(&"Z".parse().unwrap()) + 1f64.tanh()).abs() < 1e-14);

        let r = random_hamiltonian(2, 2, 3, &CoefficientLaw::Uniform).unwrap();
        let flat = gibbs(&r, 0.0).unwrap();
        assert!(max_abs(&(&flat.rho - DMatrix::identity(4, 4) * Complex64::new(0.25, 0.0))) < 1e-14);
        let zero = gibbs(&LocalHamiltonian::zero(3, 2).unwrap(), 2.0).unwrap();
        assert!(max_abs(&(&zero.rho - DMatrix::identity(8, 8) * Complex64::new(0.125, 0.0))) < 1e-14);
        assert!(gibbs(&r, -1.0).is_err());
    }

    #[test]
    fn gibbs_positivity_corpus() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for i in 0..200 {
            let n = 1 + i % 3;
            let k = 1 + i % n.min(2);
            let hm = random_hamiltonian_with(n, k, &mut rng, &CoefficientLaw::Uniform).unwrap();
            let beta = rng.random_range(0.0..=5.0);
            let g = gibbs(&hm, beta).unwrap();
            assert!(is_density_matrix(&g.rho, EXACT_TOL));
            // Direct series-free check: rho * exp(beta H) is proportional to identity.
            let eig = hm.eigen();
            let expm = eig.map(|v| Complex64::new((-beta * v).exp(), 0.0));
            let direct = &expm / expm.trace();
            assert!(max_abs(&(direct - &g.rho)) < 1e-9);
        }
    }

    #[test]
    fn random_laws() {
        let a = random_hamiltonian(2, 2, 7, &CoefficientLaw::Uniform).unwrap();
        let b = random_hamiltonian(2, 2, 7, &CoefficientLaw::Uniform).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 15);

        let f = random_hamiltonian(3, 2, 1, &CoefficientLaw::FixedNorm { target: 0.6 }).unwrap();
        assert!((f.frobenius_norm() - 0.6).abs() < 1e-12);

        let s = random_hamiltonian(3, 2, 1, &CoefficientLaw::Sparse { support: 3 }).unwrap();
        assert_eq!(s.len(), 3);

        let big = random_hamiltonian(1, 1, 1, &CoefficientLaw::FixedNorm { target: 1.7 }).unwrap();
        assert!((big.frobenius_norm() - 1.7).abs() < 1e-12);
        assert!(big.max_abs_coeff() <= 1.0);
        assert!(matches!(
            random_hamiltonian(1, 1, 1, &CoefficientLaw::FixedNorm { target: 1.8 }),
            Err(Error::UnreachableNorm { .. })
        ));
        assert!(random_hamiltonian(1, 1, 1, &CoefficientLaw::Sparse { support: 4 }).is_err());
    }

    #[test]
    fn text_format_round_trips_bit_exactly() {
        for seed in 0..10 {
            let r = random_hamiltonian(3, 2, seed, &CoefficientLaw::Uniform).unwrap();
            let back = LocalHamiltonian::from_text(&r.to_text()).unwrap();
            assert_eq!(back, r);
            for (p, v) in r.terms() {
                assert_eq!(back.coeff(&p).to_bits(), v.to_bits());
            }
        }
        let err = LocalHamiltonian::from_text("n 2\nk 1\nXX 0.5\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        assert!(LocalHamiltonian::from_text("n 2\nXI 0.5\n").is_err());
        assert!(LocalHamiltonian::from_text("n 1\nk 1\nX 0.5\nX 0.1\n").is_err());
    }

    #[test]
    fn json_round_trip_validates() {
        let r = random_hamiltonian(2, 2, 4, &CoefficientLaw::Uniform).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let back: LocalHamiltonian = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        let bad = r#"{"n":1,"k":1,"terms":{"X":2.0}}"#;
        assert!(serde_json::from_str::<LocalHamiltonian>(bad).is_err());
    }
}

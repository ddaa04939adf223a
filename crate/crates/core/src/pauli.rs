//! Pauli strings, their enumeration by locality, and Pauli-basis expansions.
//!
//! Letters are packed two bits per qubit in the symplectic `(x, z)` convention.
//! Qubit 0 is the leftmost letter of the text form and acts on the most
//! significant bit of a computational basis index, so `"IZ"` is `I ⊗ Z` with
//! matrix `diag(1, -1, 1, -1)`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{qubits_for_dimension, DenseOperator};

pub const MAX_QUBITS: usize = 12;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I_UNIT: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    pub const ALL: [Letter; 4] = [Letter::I, Letter::X, Letter::Y, Letter::Z];
    pub const NON_IDENTITY: [Letter; 3] = [Letter::X, Letter::Y, Letter::Z];

    fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    /// Rank in the enumeration order `I < X < Y < Z`.
    pub fn rank(self) -> u64 {
        self as u64
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Letter::I),
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }
}

/// A tensor product of single-qubit Paulis, without phase.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: u8,
    x: u32,
    z: u32,
}

impl PauliString {
    pub fn identity(n: usize) -> Result<Self> {
        check_qubits(n)?;
        Ok(Self { n: n as u8, x: 0, z: 0 })
    }

    pub fn from_letters(letters: &[Letter]) -> Result<Self> {
        let n = letters.len();
        check_qubits(n)?;
        let mut p = Self { n: n as u8, x: 0, z: 0 };
        for (q, &l) in letters.iter().enumerate() {
            p.set(q, l);
        }
        Ok(p)
    }

    /// A single non-identity letter on qubit `q`.
    pub fn single(n: usize, q: usize, letter: Letter) -> Result<Self> {
        let mut p = Self::identity(n)?;
        if q >= n {
            return Err(Error::InvalidArgument(format!("qubit {q} out of range for {n} qubits")));
        }
        p.set(q, letter);
        Ok(p)
    }

    /// Builds a string from masks in basis-index bit order (qubit `q` is bit `n-1-q`).
    pub fn from_masks(n: usize, x: u32, z: u32) -> Result<Self> {
        check_qubits(n)?;
        let full = mask(n);
        if x & !full != 0 || z & !full != 0 {
            return Err(Error::InvalidArgument("mask bits beyond qubit count".into()));
        }
        Ok(Self { n: n as u8, x, z })
    }

    fn bit(&self, q: usize) -> u32 {
        1 << (self.n as usize - 1 - q)
    }

    fn set(&mut self, q: usize, l: Letter) {
        let b = self.bit(q);
        let (x, z) = l.bits();
        self.x = if x { self.x | b } else { self.x & !b };
        self.z = if z { self.z | b } else { self.z & !b };
    }

    pub fn num_qubits(&self) -> usize {
        self.n as usize
    }

    pub fn x_mask(&self) -> u32 {
        self.x
    }

    pub fn z_mask(&self) -> u32 {
        self.z
    }

    pub fn letter(&self, q: usize) -> Letter {
        let b = self.bit(q);
        Letter::from_bits(self.x & b != 0, self.z & b != 0)
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.num_qubits()).map(move |q| self.letter(q))
    }

    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Qubits on which the string acts non-trivially.
    pub fn support(&self) -> Vec<usize> {
        (0..self.num_qubits())
            .filter(|&q| self.letter(q) != Letter::I)
            .collect()
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    /// Base-4 key with qubit 0 most significant; orders strings lexicographically.
    fn key(&self) -> u64 {
        self.letters().fold(0u64, |acc, l| acc * 4 + l.rank())
    }

    fn y_phase(&self) -> Complex64 {
        match (self.x & self.z).count_ones() % 4 {
            0 => ONE,
            1 => I_UNIT,
            2 => -ONE,
            _ => -I_UNIT,
        }
    }

    /// `P|b> = phase * |row>`; returns `(row, phase)`.
    #[inline]
    pub fn apply_to_basis(&self, b: usize) -> (usize, Complex64) {
        let sign = if (b as u32 & self.z).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
        (b ^ self.x as usize, self.y_phase() * sign)
    }

    pub fn dimension(&self) -> usize {
        1 << self.n
    }

    pub fn to_matrix(&self) -> DenseOperator {
        let d = self.dimension();
        let mut m = DMatrix::zeros(d, d);
        for b in 0..d {
            let (r, v) = self.apply_to_basis(b);
            m[(r, b)] = v;
        }
        m
    }

    /// `Tr[P A]` in `O(2^n)`.
    pub fn trace_product(&self, a: &DenseOperator) -> Complex64 {
        let d = self.dimension();
        let phase = self.y_phase();
        let mut acc = Complex64::new(0.0, 0.0);
        for c in 0..d {
            let v = a[(c, c ^ self.x as usize)];
            if (c as u32 & self.z).count_ones().is_multiple_of(2) {
                acc += v;
            } else {
                acc -= v;
            }
        }
        acc * phase
    }

    pub fn apply_to_vector(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let mut out = DVector::zeros(v.len());
        for b in 0..v.len() {
            let (r, ph) = self.apply_to_basis(b);
            out[r] = ph * v[b];
        }
        out
    }

    /// `P * m`.
    pub fn left_mul(&self, m: &DenseOperator) -> DenseOperator {
        let d = self.dimension();
        let mut out = DMatrix::zeros(d, m.ncols());
        for s in 0..d {
            let (r, ph) = self.apply_to_basis(s);
            for c in 0..m.ncols() {
                out[(r, c)] = ph * m[(s, c)];
            }
        }
        out
    }

    /// `m * P`.
    pub fn right_mul(&self, m: &DenseOperator) -> DenseOperator {
        let d = self.dimension();
        let mut out = DMatrix::zeros(m.nrows(), d);
        for c in 0..d {
            let (s, ph) = self.apply_to_basis(c);
            for r in 0..m.nrows() {
                out[(r, c)] = m[(r, s)] * ph;
            }
        }
        out
    }
}

fn mask(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

pub(crate) fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        Err(Error::QubitCount(n))
    } else {
        Ok(())
    }
}

impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n.cmp(&other.n).then_with(|| self.key().cmp(&other.key()))
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in self.letters() {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(Letter::from_char)
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::PauliParse(s.to_string()))?;
        if letters.is_empty() {
            return Err(Error::PauliParse(s.to_string()));
        }
        Self::from_letters(&letters)
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// `sum_{l=0..k} 3^l C(n, l)`.
pub fn local_pauli_count(n: usize, k: usize) -> u64 {
    (0..=k.min(n) as u64)
        .map(|l| 3u64.pow(l as u32) * binomial(n as u64, l))
        .sum()
}

/// All Pauli strings of weight at most `k` on `n` qubits, in increasing order.
pub fn enumerate_local_paulis(n: usize, k: usize, include_identity: bool) -> Result<Vec<PauliString>> {
    check_qubits(n)?;
    if k > n {
        return Err(Error::Locality { n, k });
    }
    let mut out = Vec::with_capacity(local_pauli_count(n, k) as usize);
    let mut letters = vec![Letter::I; n];
    fill(&mut letters, 0, k, &mut out)?;
    if !include_identity {
        out.retain(|p| !p.is_identity());
    }
    out.sort();
    Ok(out)
}

fn fill(letters: &mut [Letter], q: usize, budget: usize, out: &mut Vec<PauliString>) -> Result<()> {
    if q == letters.len() {
        out.push(PauliString::from_letters(letters)?);
        return Ok(());
    }
    letters[q] = Letter::I;
    fill(letters, q + 1, budget, out)?;
    if budget > 0 {
        for l in Letter::NON_IDENTITY {
            letters[q] = l;
            fill(letters, q + 1, budget - 1, out)?;
        }
        letters[q] = Letter::I;
    }
    Ok(())
}

/// Coefficients `a_P = Tr[P A] / 2^n` of an operator in the Pauli basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliExpansion {
    n: usize,
    coeffs: BTreeMap<PauliString, Complex64>,
}

impl PauliExpansion {
    pub fn new(n: usize) -> Result<Self> {
        check_qubits(n)?;
        Ok(Self { n, coeffs: BTreeMap::new() })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, p: PauliString, value: Complex64) -> Result<()> {
        if p.num_qubits() != self.n {
            return Err(Error::QubitMismatch { left: self.n, right: p.num_qubits() });
        }
        self.coeffs.insert(p, value);
        Ok(())
    }

    pub fn get(&self, p: &PauliString) -> Complex64 {
        self.coeffs.get(p).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> {
        self.coeffs.iter()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `sum_P a_P P`.
    pub fn reconstruct(&self) -> DenseOperator {
        let d = 1usize << self.n;
        let mut m = DMatrix::zeros(d, d);
        for (p, &a) in &self.coeffs {
            for b in 0..d {
                let (r, ph) = p.apply_to_basis(b);
                m[(r, b)] += a * ph;
            }
        }
        m
    }

    /// Coefficient-side normalized Frobenius norm, `sqrt(sum |a_P|^2)`.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Expands `a` in the Pauli basis, over strings of weight `<= k` (all strings if `k` is `None`).
pub fn expand(a: &DenseOperator, k: Option<usize>) -> Result<PauliExpansion> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(a.nrows()));
    }
    let n = qubits_for_dimension(a.nrows())?;
    let paulis = enumerate_local_paulis(n, k.unwrap_or(n), true)?;
    let scale = 1.0 / a.nrows() as f64;
    let mut exp = PauliExpansion::new(n)?;
    for p in paulis {
        exp.coeffs.insert(p, p.trace_product(a) * scale);
    }
    Ok(exp)
}

/// `sum_P conj(a_P) b_P`, equal to `Tr[A^dagger B] / 2^n`.
pub fn plancherel_inner(a: &PauliExpansion, b: &PauliExpansion) -> Result<Complex64> {
    if a.n != b.n {
        return Err(Error::QubitMismatch { left: a.n, right: b.n });
    }
    Ok(a
        .coeffs
        .iter()
        .filter_map(|(p, x)| b.coeffs.get(p).map(|y| x.conj() * y))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, max_abs, normalized_inner};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn single(l: Letter) -> DenseOperator {
        let (o, z) = (c(1.0, 0.0), c(0.0, 0.0));
        match l {
            Letter::I => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
            Letter::X => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            Letter::Y => DMatrix::from_row_slice(2, 2, &[z, c(0.0, -1.0), c(0.0, 1.0), z]),
            Letter::Z => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        }
    }

    fn kron_oracle(s: &PauliString) -> DenseOperator {
        s.letters()
            .map(single)
            .reduce(|a, b| kron(&a, &b))
            .unwrap()
    }

    fn random_operator(n: usize, rng: &mut ChaCha8Rng) -> DenseOperator {
        let d = 1 << n;
        DMatrix::from_fn(d, d, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn single_qubit_matrices() {
        assert_eq!(p("X").to_matrix(), single(Letter::X));
        assert_eq!(p("Y").to_matrix(), single(Letter::Y));
        let y = p("Y").to_matrix();
        assert!((&y * &y - DMatrix::identity(2, 2)).norm() < 1e-15);
        let iz = p("IZ").to_matrix();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![
            c(1.0, 0.0),
            c(-1.0, 0.0),
            c(1.0, 0.0),
            c(-1.0, 0.0),
        ]));
        assert_eq!(iz, expected);
    }

    #[test]
    fn matrices_match_kronecker_products() {
        for s in enumerate_local_paulis(3, 3, true).unwrap() {
            let m = s.to_matrix();
            assert!((&m - kron_oracle(&s)).norm() < 1e-15, "{s}");
            assert!((&m * &m - DMatrix::identity(8, 8)).norm() < 1e-14);
            assert!((&m - m.adjoint()).norm() < 1e-15);
        }
    }

    #[test]
    fn text_round_trip_and_order() {
        assert_eq!(p("IXYZ").to_string(), "IXYZ");
        assert!(p("IX") < p("IY"));
        assert!(p("IZ") < p("XI"));
        assert!("IQ".parse::<PauliString>().is_err());
        assert!("".parse::<PauliString>().is_err());
        assert_eq!(p("XYZ").weight(), 3);
        assert_eq!(p("IYI").support(), vec![1]);
    }

    #[test]
    fn enumeration_counts() {
        let one = enumerate_local_paulis(1, 1, true).unwrap();
        assert_eq!(one.iter().map(|s| s.to_string()).collect::<Vec<_>>(), ["I", "X", "Y", "Z"]);
        let three = enumerate_local_paulis(3, 2, true).unwrap();
        assert_eq!(three.len(), 37);
        assert!(three.len() as u64 <= 100 * 9);
        assert_eq!(enumerate_local_paulis(3, 2, false).unwrap().len(), 36);
        assert!(enumerate_local_paulis(0, 0, true).is_err());
        assert!(enumerate_local_paulis(13, 1, true).is_err());
        assert!(enumerate_local_paulis(3, 4, true).is_err());
    }

    #[test]
    fn enumeration_matches_brute_force_filter() {
        for n in 1..=6 {
            for k in 0..=n {
                let all = enumerate_local_paulis(n, n, true).unwrap();
                let filtered: Vec<_> = all.into_iter().filter(|s| s.weight() <= k).collect();
                let listed = enumerate_local_paulis(n, k, true).unwrap();
                assert_eq!(listed, filtered);
                assert_eq!(listed.len() as u64, local_pauli_count(n, k));
                assert!(listed.windows(2).all(|w| w[0] < w[1]));
                assert!(local_pauli_count(n, k) as f64 <= 100.0 * (n as f64).powi(k as i32));
            }
        }
    }

    #[test]
    fn expansion_examples() {
        let x = expand(&p("X").to_matrix(), None).unwrap();
        assert!((x.get(&p("X")) - 1.0).norm() < 1e-15);
        assert!(x.get(&p("Z")).norm() < 1e-15);

        let t = 0.7f64;
        let u = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::from_polar(1.0, -t),
            Complex64::from_polar(1.0, t),
        ]));
        let e = expand(&u, None).unwrap();
        assert!((e.get(&p("I")) - c(t.cos(), 0.0)).norm() < 1e-15);
        assert!((e.get(&p("Z")) - c(0.0, -t.sin())).norm() < 1e-15);

        let h = (p("X").to_matrix() + p("Z").to_matrix()) / c(2f64.sqrt(), 0.0);
        let e = expand(&h, None).unwrap();
        assert!((e.get(&p("X")).re - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((e.l2_norm() - 1.0).abs() < 1e-14);
        assert!(expand(&DMatrix::zeros(3, 3), None).is_err());
    }

    #[test]
    fn plancherel_examples() {
        let x = expand(&p("X").to_matrix(), None).unwrap();
        let z = expand(&p("Z").to_matrix(), None).unwrap();
        assert!((plancherel_inner(&x, &x).unwrap() - 1.0).norm() < 1e-15);
        assert!(plancherel_inner(&x, &z).unwrap().norm() < 1e-15);
        let two = expand(&p("XX").to_matrix(), None).unwrap();
        assert!(plancherel_inner(&x, &two).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_operator(2, &mut rng);
            let b = random_operator(2, &mut rng);
            let lhs = plancherel_inner(&expand(&a, None).unwrap(), &expand(&b, None).unwrap()).unwrap();
            assert!((lhs - normalized_inner(&a, &b)).norm() < 1e-10);
        }
    }

    #[test]
    fn reconstruction_and_parseval_corpus() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for i in 0..200 {
            let n = 1 + i % 3;
            let a = random_operator(n, &mut rng);
            let e = expand(&a, None).unwrap();
            assert!(max_abs(&(e.reconstruct() - &a)) < 1e-10);
            let frob = (normalized_inner(&a, &a).re).sqrt();
            assert!((e.l2_norm() - frob).abs() < 1e-10);
        }
    }

    #[test]
    fn left_and_right_products_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_operator(3, &mut rng);
        for s in ["XYZ", "IYI", "ZZX"] {
            let m = p(s).to_matrix();
            assert!((p(s).left_mul(&a) - &m * &a).norm() < 1e-13);
            assert!((p(s).right_mul(&a) - &a * &m).norm() < 1e-13);
            assert!((p(s).trace_product(&a) - (&m * &a).trace()).norm() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn commutation_matches_matrices(a in 0u32..64, b in 0u32..64) {
            let p1 = PauliString::from_masks(3, a & 7, (a >> 3) & 7).unwrap();
            let p2 = PauliString::from_masks(3, b & 7, (b >> 3) & 7).unwrap();
            let (m1, m2) = (p1.to_matrix(), p2.to_matrix());
            let commute = (&m1 * &m2 - &m2 * &m1).norm() < 1e-12;
            prop_assert_eq!(commute, p1.commutes_with(&p2));
        }

        #[test]
        fn text_form_round_trips(word in "[IXYZ]{1,12}") {
            let s: PauliString = word.parse().unwrap();
            prop_assert_eq!(s.to_string(), word);
        }
    }
}

//! Pure stabilizer states: uniform sampling, exhaustive enumeration for small
//! `n`, and projective measurement in a stabilizer basis.
//!
//! A Pauli string is handled here as a vector in `F_2^{2n}` packed into a
//! `u64`: bits `0..n` hold the x mask and bits `n..2n` the z mask.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{DenseOperator, StateVector};
use crate::pauli::{check_qubits, PauliString};

/// Largest `n` accepted by [`enumerate_stabilizer_states`].
pub const MAX_ENUMERATION_QUBITS: usize = 4;

/// The state stabilized by `(-1)^{signs[j]} generators[j]` for every `j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizerState {
    pub generators: Vec<PauliString>,
    /// `true` marks a `-1` sign.
    pub signs: Vec<bool>,
}

fn pack(p: &PauliString) -> u64 {
    let n = p.num_qubits();
    p.x_mask() as u64 | ((p.z_mask() as u64) << n)
}

fn unpack(n: usize, v: u64) -> PauliString {
    let low = (1u64 << n) - 1;
    PauliString::from_masks(n, (v & low) as u32, ((v >> n) & low) as u32).expect("mask fits n qubits")
}

/// Exchanges the x and z halves, so that `symplectic(a, b) = parity(a & swap(b))`.
fn swap_halves(n: usize, v: u64) -> u64 {
    let low = (1u64 << n) - 1;
    (v >> n) | ((v & low) << n)
}

/// Reduced row echelon form with pivots at the highest set bit; zero rows dropped.
fn rref(rows: &[u64]) -> Vec<u64> {
    let mut rows: Vec<u64> = rows.iter().copied().filter(|&r| r != 0).collect();
    let mut out: Vec<u64> = Vec::new();
    while let Some(pos) = (0..rows.len()).max_by_key(|&i| rows[i]) {
        let pivot_row = rows.swap_remove(pos);
        if pivot_row == 0 {
            break;
        }
        let pivot = 63 - pivot_row.leading_zeros();
        for r in rows.iter_mut().chain(out.iter_mut()) {
            if (*r >> pivot) & 1 == 1 {
                *r ^= pivot_row;
            }
        }
        rows.retain(|&r| r != 0);
        out.push(pivot_row);
    }
    out.sort_unstable_by(|a, b| b.cmp(a));
    out
}

fn reduce(basis: &[u64], mut v: u64) -> u64 {
    for &row in basis {
        let pivot = 63 - row.leading_zeros();
        if (v >> pivot) & 1 == 1 {
            v ^= row;
        }
    }
    v
}

/// Basis of `{v in F_2^bits : parity(v & r) = 0 for every row r}`.
fn nullspace(rows: &[u64], bits: usize) -> Vec<u64> {
    let reduced = rref(rows);
    let pivots: Vec<u32> = reduced.iter().map(|r| 63 - r.leading_zeros()).collect();
    (0..bits as u32)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = 1u64 << free;
            for (row, &p) in reduced.iter().zip(&pivots) {
                if (row >> free) & 1 == 1 {
                    v |= 1 << p;
                }
            }
            v
        })
        .collect()
}

/// Basis of the symplectic complement of `span(rows)` in `F_2^{2n}`.
fn symplectic_complement(n: usize, rows: &[u64]) -> Vec<u64> {
    let swapped: Vec<u64> = rows.iter().map(|&r| swap_halves(n, r)).collect();
    nullspace(&swapped, 2 * n)
}

fn combination(basis: &[u64], mask: u64) -> u64 {
    basis
        .iter()
        .enumerate()
        .filter(|(i, _)| (mask >> i) & 1 == 1)
        .fold(0, |acc, (_, &b)| acc ^ b)
}

/// Number of pure stabilizer states on `n` qubits: `2^n prod_{j=1}^n (2^j + 1)`.
pub fn stabilizer_state_count(n: usize) -> u128 {
    (1..=n as u32).fold(1u128 << n, |acc, j| acc * ((1u128 << j) + 1))
}

impl StabilizerState {
    /// `|0...0>`, stabilized by `Z` on every qubit.
    pub fn zero(n: usize) -> Result<Self> {
        check_qubits(n)?;
        let generators = (0..n)
            .map(|q| PauliString::single(n, q, crate::pauli::Letter::Z))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { generators, signs: vec![false; n] })
    }

    pub fn new(generators: Vec<PauliString>, signs: Vec<bool>) -> Result<Self> {
        let s = Self { generators, signs };
        s.validate()?;
        Ok(s)
    }

    pub fn num_qubits(&self) -> usize {
        self.generators.first().map_or(0, |g| g.num_qubits())
    }

    /// `n` independent, pairwise commuting generators on `n` qubits.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_qubits();
        check_qubits(n)?;
        if self.generators.len() != n || self.signs.len() != n {
            return Err(invalid(format!(
                "{} generators and {} signs for {n} qubits",
                self.generators.len(),
                self.signs.len()
            )));
        }
        for (i, a) in self.generators.iter().enumerate() {
            if a.num_qubits() != n {
                return Err(Error::QubitMismatch { left: n, right: a.num_qubits() });
            }
            if let Some(b) = self.generators[i + 1..].iter().find(|b| !a.commutes_with(b)) {
                return Err(invalid(format!("generators {a} and {b} anticommute")));
            }
        }
        let packed: Vec<u64> = self.generators.iter().map(pack).collect();
        if rref(&packed).len() != n {
            return Err(invalid("stabilizer generators are not independent"));
        }
        Ok(())
    }

    /// The same state with the sign of generator `j` flipped wherever bit
    /// `n-1-j` of `outcome` is set.
    pub fn flipped(&self, outcome: usize) -> Self {
        let n = self.num_qubits();
        let signs = self
            .signs
            .iter()
            .enumerate()
            .map(|(j, &s)| s ^ ((outcome >> (n - 1 - j)) & 1 == 1))
            .collect();
        Self { generators: self.generators.clone(), signs }
    }

    /// Normalized state vector, global phase fixed so the first nonzero amplitude is real positive.
    pub fn state_vector(&self) -> StateVector {
        let n = self.num_qubits();
        let d = 1usize << n;
        for b in 0..d {
            let mut v = StateVector::zeros(d);
            v[b] = Complex64::new(1.0, 0.0);
            for (g, &s) in self.generators.iter().zip(&self.signs) {
                let gv = g.apply_to_vector(&v);
                v = if s { (&v - gv).unscale(2.0) } else { (&v + gv).unscale(2.0) };
            }
            let norm_sq = v.norm_squared();
            // Nonzero diagonal entries of a stabilizer projector are at least 1/d.
            if norm_sq > 0.5 / d as f64 {
                let lead = v.iter().find(|z| z.norm() > 1e-9).copied().unwrap_or(Complex64::new(1.0, 0.0));
                let phase = lead.conj() / lead.norm();
                return v * (phase / norm_sq.sqrt());
            }
        }
        unreachable!("a valid stabilizer group has a nonzero projector")
    }

    pub fn density(&self) -> DenseOperator {
        let v = self.state_vector();
        &v * v.adjoint()
    }

    /// Canonical identity of the state: reduced generators of the stabilizer
    /// group with the sign each takes on the state.
    pub fn canonical_key(&self) -> (Vec<u64>, Vec<bool>) {
        let n = self.num_qubits();
        let rows = rref(&self.generators.iter().map(pack).collect::<Vec<_>>());
        let v = self.state_vector();
        let signs = rows
            .iter()
            .map(|&r| {
                let g = unpack(n, r);
                v.dotc(&g.apply_to_vector(&v)).re < 0.0
            })
            .collect();
        (rows, signs)
    }
}

/// A uniformly random pure stabilizer state.
///
/// Builds a random maximal isotropic subspace one vector at a time, each new
/// vector drawn uniformly from the symplectic complement of the current span
/// minus the span itself; every maximal subspace is reached with equal
/// probability. Signs are then uniform.
pub fn sample_stabilizer_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<StabilizerState> {
    check_qubits(n)?;
    let mut rows: Vec<u64> = Vec::with_capacity(n);
    for _ in 0..n {
        let complement = symplectic_complement(n, &rows);
        let span = rref(&rows);
        let dim = complement.len();
        let v = loop {
            let mask = rng.random_range(0..(1u64 << dim));
            let v = combination(&complement, mask);
            if reduce(&span, v) != 0 {
                break v;
            }
        };
        rows.push(v);
    }
    let generators = rows.iter().map(|&r| unpack(n, r)).collect();
    let signs = (0..n).map(|_| rng.random_bool(0.5)).collect();
    Ok(StabilizerState { generators, signs })
}

/// Every pure stabilizer state on `n <= 4` qubits, in a deterministic order.
pub fn enumerate_stabilizer_states(n: usize) -> Result<Vec<StabilizerState>> {
    check_qubits(n)?;
    if n > MAX_ENUMERATION_QUBITS {
        return Err(invalid(format!("enumeration limited to n <= {MAX_ENUMERATION_QUBITS}")));
    }
    let mut level: BTreeSet<Vec<u64>> = BTreeSet::from([Vec::new()]);
    for _ in 0..n {
        let mut next = BTreeSet::new();
        for span in &level {
            let complement = symplectic_complement(n, span);
            for mask in 0..(1u64 << complement.len()) {
                let v = combination(&complement, mask);
                if reduce(span, v) == 0 {
                    continue;
                }
                let mut grown = span.clone();
                grown.push(v);
                next.insert(rref(&grown));
            }
        }
        level = next;
    }
    let mut out = Vec::new();
    for rows in &level {
        let generators: Vec<PauliString> = rows.iter().map(|&r| unpack(n, r)).collect();
        for s in 0..(1usize << n) {
            let signs = (0..n).map(|j| (s >> (n - 1 - j)) & 1 == 1).collect();
            out.push(StabilizerState { generators: generators.clone(), signs });
        }
    }
    Ok(out)
}

/// Measures the commuting `generators` one after another on a pure state.
/// Bit `n-1-j` of the result is set when generator `j` returns the sign
/// opposite to `signs[j]`; the state collapses in place.
pub fn measure_vector<R: Rng + ?Sized>(
    psi: &mut StateVector,
    generators: &[PauliString],
    signs: &[bool],
    rng: &mut R,
) -> usize {
    let n = generators.len();
    let mut outcome = 0;
    for (j, (g, &s)) in generators.iter().zip(signs).enumerate() {
        let gpsi = g.apply_to_vector(psi);
        let sign = if s { -1.0 } else { 1.0 };
        let expect = psi.dotc(&gpsi).re * sign;
        let p_match = ((1.0 + expect) / 2.0).clamp(0.0, 1.0);
        let matched = rng.random::<f64>() < p_match;
        let (eig, p) = if matched { (sign, p_match) } else { (-sign, 1.0 - p_match) };
        *psi = (&*psi + gpsi.scale(eig)).scale(0.5 / p.sqrt());
        if !matched {
            outcome |= 1 << (n - 1 - j);
        }
    }
    outcome
}

/// Density-matrix counterpart of [`measure_vector`].
pub fn measure_density<R: Rng + ?Sized>(
    rho: &mut DenseOperator,
    generators: &[PauliString],
    signs: &[bool],
    rng: &mut R,
) -> usize {
    let n = generators.len();
    let mut outcome = 0;
    for (j, (g, &s)) in generators.iter().zip(signs).enumerate() {
        let sign = if s { -1.0 } else { 1.0 };
        let expect = g.trace_product(rho).re * sign;
        let p_match = ((1.0 + expect) / 2.0).clamp(0.0, 1.0);
        let matched = rng.random::<f64>() < p_match;
        let (eig, p) = if matched { (sign, p_match) } else { (-sign, 1.0 - p_match) };
        // (I + eig G) rho (I + eig G) / (4 p)
        let left = &*rho + g.left_mul(rho) * Complex64::new(eig, 0.0);
        let both = &left + g.right_mul(&left) * Complex64::new(eig, 0.0);
        *rho = both * Complex64::new(0.25 / p, 0.0);
        if !matched {
            outcome |= 1 << (n - 1 - j);
        }
    }
    outcome
}

//! Brute-force ground truth: exact time evolution, trace distances, Schatten
//! moments, and the identity Pauli coefficient of a unitary.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::hamiltonian::PauliSum;
use crate::linalg::{hermitian_trace_norm, DenseOperator, HermitianEigen};

/// `exp(-i t H)` for any time, from one cached eigendecomposition of `H`.
#[derive(Clone, Debug)]
pub struct Propagator {
    eig: HermitianEigen,
}

impl Propagator {
    pub fn new(h: &PauliSum) -> Self {
        Self { eig: h.eigen() }
    }

    pub fn from_matrix(h: &DenseOperator) -> Self {
        Self { eig: HermitianEigen::new(h) }
    }

    pub fn at(&self, t: f64) -> DenseOperator {
        self.eig.map(|v| Complex64::from_polar(1.0, -t * v))
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.values
    }
}

pub fn evolve(h: &PauliSum, t: f64) -> DenseOperator {
    Propagator::new(h).at(t)
}

/// `||rho - sigma||_tr`, the sum of singular values of the difference.
pub fn trace_distance(rho: &DenseOperator, sigma: &DenseOperator) -> Result<f64> {
    if rho.shape() != sigma.shape() {
        return Err(Error::QubitMismatch { left: rho.nrows(), right: sigma.nrows() });
    }
    Ok(hermitian_trace_norm(&(rho - sigma)))
}

/// `(Tr[|H|^l] / 2^n)^(1/l)`.
pub fn schatten_moment(h: &PauliSum, l: u32) -> Result<f64> {
    if l < 2 {
        return Err(invalid(format!("moment order {l} must be >= 2")));
    }
    Ok(schatten_moment_from_spectrum(&h.eigen().values, l))
}

pub fn schatten_moment_from_spectrum(values: &[f64], l: u32) -> f64 {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    // Factor out the largest eigenvalue so high powers stay in range.
    let mean: f64 = values.iter().map(|v| (v.abs() / scale).powi(l as i32)).sum::<f64>() / values.len() as f64;
    scale * mean.powf(1.0 / l as f64)
}

/// Hypercontractive factor `l^(k/2)` bounding `schatten_moment(H, l) / ||H||_F`.
pub fn bonami_factor(l: u32, k: usize) -> f64 {
    (l as f64).powf(k as f64 / 2.0)
}

/// `Tr[U] / 2^n`, the Pauli coefficient of the identity string.
pub fn identity_coeff(u: &DenseOperator) -> Complex64 {
    u.trace() / u.nrows() as f64
}

/// Partial sums `S(L) = sum_{l=3}^{L} x^l l^(l k / 2) / l!` for `L = 3..=max_l`,
/// evaluated term by term in log space. Index `i` of the result is `S(3 + i)`.
pub fn bonami_tail_partial_sums(k: usize, x: f64, max_l: u32) -> Vec<f64> {
    let mut out = Vec::new();
    let mut sum = 0.0;
    let mut log_factorial = 2f64.ln();
    for l in 3..=max_l {
        let lf = l as f64;
        log_factorial += lf.ln();
        let log_term = lf * x.ln() + lf * k as f64 / 2.0 * lf.ln() - log_factorial;
        sum += log_term.exp();
        out.push(sum);
    }
    out
}

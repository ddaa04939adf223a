//! Dense complex matrices and the single Hermitian eigendecomposition kernel
//! every matrix function in the crate goes through.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A `2^n x 2^n` complex matrix.
pub type DenseOperator = DMatrix<Complex64>;
pub type StateVector = DVector<Complex64>;

/// Tolerance for exact identities (unitarity, normalization, Parseval).
pub const EXACT_TOL: f64 = 1e-10;

pub fn qubits_for_dimension(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::Dimension(dim));
    }
    let n = dim.trailing_zeros() as usize;
    crate::pauli::check_qubits(n)?;
    Ok(n)
}

pub fn identity(dim: usize) -> DenseOperator {
    DMatrix::identity(dim, dim)
}

pub fn kron(a: &DenseOperator, b: &DenseOperator) -> DenseOperator {
    a.kronecker(b)
}

/// `Tr[A^dagger B] / dim`.
pub fn normalized_inner(a: &DenseOperator, b: &DenseOperator) -> Complex64 {
    a.adjoint().component_mul(&b.transpose()).sum() / a.nrows() as f64
}

/// Largest singular value.
pub fn operator_norm(a: &DenseOperator) -> f64 {
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0f64, |m, &s| m.max(s))
}

/// Largest entry modulus.
pub fn max_abs(a: &DenseOperator) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

pub fn is_unitary(u: &DenseOperator, tol: f64) -> bool {
    max_abs(&(u.adjoint() * u - identity(u.nrows()))) <= tol
}

pub fn is_hermitian(a: &DenseOperator, tol: f64) -> bool {
    max_abs(&(a - a.adjoint())) <= tol
}

/// Hermitian, unit trace, and spectrum bounded below by `-tol`.
pub fn is_density_matrix(rho: &DenseOperator, tol: f64) -> bool {
    if rho.nrows() != rho.ncols() || !is_hermitian(rho, tol) {
        return false;
    }
    if (rho.trace() - 1.0).norm() > tol {
        return false;
    }
    HermitianEigen::new(rho).values.iter().all(|&v| v >= -tol)
}

/// Eigendecomposition `A = V diag(values) V^dagger` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: DenseOperator,
}

impl HermitianEigen {
    /// Decomposes the Hermitian part `(A + A^dagger) / 2`.
    pub fn new(a: &DenseOperator) -> Self {
        let herm = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(herm);
        Self {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }

    /// `V diag(f(values)) V^dagger`.
    pub fn map<F: Fn(f64) -> Complex64>(&self, f: F) -> DenseOperator {
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            let fv = f(v);
            scaled.column_mut(j).iter_mut().for_each(|x| *x *= fv);
        }
        scaled * self.vectors.adjoint()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Sum of singular values of a Hermitian matrix.
pub fn hermitian_trace_norm(a: &DenseOperator) -> f64 {
    HermitianEigen::new(a).values.iter().map(|v| v.abs()).sum()
}

/// Row-major serialization of a complex matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixData {
    pub dim: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&DenseOperator> for MatrixData {
    fn from(m: &DenseOperator) -> Self {
        let dim = m.nrows();
        let mut re = Vec::with_capacity(dim * dim);
        let mut im = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                re.push(m[(r, c)].re);
                im.push(m[(r, c)].im);
            }
        }
        Self { dim, re, im }
    }
}

impl MatrixData {
    pub fn to_matrix(&self) -> Result<DenseOperator> {
        let len = self.dim * self.dim;
        if self.re.len() != len || self.im.len() != len {
            return Err(Error::InvalidArgument("matrix data length mismatch".into()));
        }
        Ok(DMatrix::from_fn(self.dim, self.dim, |r, c| {
            Complex64::new(self.re[r * self.dim + c], self.im[r * self.dim + c])
        }))
    }
}

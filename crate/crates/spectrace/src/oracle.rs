//! Dense reference computations for tests and acceptance runs at desk scale.
//!
//! Everything here goes through full decompositions (LAPACK via
//! `ndarray-linalg`), deliberately independent of the stochastic estimator
//! path it is used to check. Eigenvalues are reported ascending; singular
//! values come from the Gram-matrix eigenvalue route with negatives clamped
//! to zero before the square root.

use crate::chebyshev::ChebyshevInterpolant;
use crate::linop::{LinearOperator, SparseMatrix};
use ndarray::{Array1, Array2};
use ndarray_linalg::{Cholesky, Eigh, EigValsh, UPLO};
use std::fmt;

#[derive(Debug)]
pub enum OracleError {
    NotSquare { rows: usize, cols: usize },
    NonFiniteValue { eigenvalue: f64 },
    Backend(String),
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::NotSquare { rows, cols } => {
                write!(f, "square matrix required, got {rows}x{cols}")
            }
            OracleError::NonFiniteValue { eigenvalue } => {
                write!(f, "f({eigenvalue}) is not finite; interval assumption violated")
            }
            OracleError::Backend(msg) => write!(f, "decomposition failed: {msg}"),
        }
    }
}

impl std::error::Error for OracleError {}

/// Dense row-major matrix for reference computations.
#[derive(Clone, Debug)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn from_sparse(m: &SparseMatrix) -> Self {
        let mut dense = Self::zeros(m.rows(), m.cols());
        for (r, c, v) in m.entries() {
            dense.data[r * m.cols() + c] += v;
        }
        dense
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn to_array(&self) -> Array2<f64> {
        Array2::from_shape_vec((self.rows, self.cols), self.data.clone())
            .expect("shape matches storage")
    }

    fn require_square(&self) -> Result<(), OracleError> {
        if self.rows != self.cols {
            return Err(OracleError::NotSquare { rows: self.rows, cols: self.cols });
        }
        Ok(())
    }

    /// Eigenvalues of a symmetric matrix, ascending.
    pub fn symmetric_eigenvalues(&self) -> Result<Vec<f64>, OracleError> {
        self.require_square()?;
        let vals = self
            .to_array()
            .eigvalsh(UPLO::Lower)
            .map_err(|e| OracleError::Backend(e.to_string()))?;
        Ok(vals.to_vec())
    }

    /// Full symmetric eigendecomposition `(eigenvalues ascending, Q)`.
    pub fn symmetric_eigen(&self) -> Result<(Vec<f64>, DenseMatrix), OracleError> {
        self.require_square()?;
        let (vals, vecs) = self
            .to_array()
            .eigh(UPLO::Lower)
            .map_err(|e| OracleError::Backend(e.to_string()))?;
        let q = DenseMatrix::from_rows(
            self.rows,
            self.cols,
            vecs.as_standard_layout().iter().copied().collect(),
        );
        Ok((vals.to_vec(), q))
    }

    /// Log-determinant through a Cholesky factorization; the triangular
    /// reference the spectral-sum route is checked against.
    pub fn cholesky_logdet(&self) -> Result<f64, OracleError> {
        self.require_square()?;
        let l = self
            .to_array()
            .cholesky(UPLO::Lower)
            .map_err(|e| OracleError::Backend(e.to_string()))?;
        Ok(2.0 * (0..self.rows).map(|i| l[(i, i)].ln()).sum::<f64>())
    }

    /// Singular values, descending, via the eigenvalues of the Gram matrix
    /// on the smaller side; eigenvalues within rounding of zero are clamped
    /// before the square root.
    pub fn singular_values(&self) -> Result<Vec<f64>, OracleError> {
        let a = self.to_array();
        let gram: Array2<f64> = if self.rows >= self.cols {
            a.t().dot(&a)
        } else {
            a.dot(&a.t())
        };
        let vals: Array1<f64> =
            gram.eigvalsh(UPLO::Lower).map_err(|e| OracleError::Backend(e.to_string()))?;
        let mut sv: Vec<f64> = vals.iter().map(|&x| x.max(0.0).sqrt()).collect();
        sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
        Ok(sv)
    }
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        debug_assert_eq!(self.rows, self.cols);
        self.rows
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            out[r] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

/// `sum_i f(lambda_i)` through a full symmetric eigendecomposition. A
/// non-finite `f(lambda)` is a hard error: it means the caller's interval
/// assumption was wrong.
pub fn dense_spectral_sum(
    a: &DenseMatrix,
    f: impl Fn(f64) -> f64,
) -> Result<f64, OracleError> {
    let mut acc = 0.0;
    for lam in a.symmetric_eigenvalues()? {
        let fl = f(lam);
        if !fl.is_finite() {
            return Err(OracleError::NonFiniteValue { eigenvalue: lam });
        }
        acc += fl;
    }
    Ok(acc)
}

pub fn dense_singular_values(m: &DenseMatrix) -> Result<Vec<f64>, OracleError> {
    m.singular_values()
}

/// Materializes `p(A)` as a dense matrix via `Q p(Lambda) Q^T`, with `p`
/// evaluated by the scalar Clenshaw path. Used to cross-check the fused
/// engine against an explicit matrix-function construction.
pub fn materialize_interpolant(
    a: &DenseMatrix,
    p: &ChebyshevInterpolant,
) -> Result<DenseMatrix, OracleError> {
    let (vals, q) = a.symmetric_eigen()?;
    let d = a.rows();
    let mut scaled = DenseMatrix::zeros(d, d); // Q * diag(p(lambda))
    for r in 0..d {
        for c in 0..d {
            scaled.set(r, c, q.get(r, c) * p.evaluate(vals[c]));
        }
    }
    let mut out = DenseMatrix::zeros(d, d);
    for r in 0..d {
        for c in 0..d {
            let mut acc = 0.0;
            for k in 0..d {
                acc += scaled.get(r, k) * q.get(c, k);
            }
            out.set(r, c, acc);
        }
    }
    Ok(out)
}

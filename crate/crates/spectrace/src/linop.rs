//! Sparse matrix storage, the linear-operator abstraction, and eigenvalue
//! interval bounds.
//!
//! [`SparseMatrix`] is compressed-row storage with column-sorted entries;
//! symmetric input is expanded to full storage at construction so that matvec
//! is a single branch-free sweep. Everything here is immutable after
//! construction and safe to share across probe workers.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::fmt;

/// An interval `[lower, upper]` known to contain every eigenvalue of an
/// operator. Individual estimators impose extra sign constraints (e.g. a
/// positive lower bound for the log-determinant).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralInterval {
    pub lower: f64,
    pub upper: f64,
}

impl SpectralInterval {
    pub fn new(lower: f64, upper: f64) -> Result<Self, LinopError> {
        if !lower.is_finite() || !upper.is_finite() || lower > upper {
            return Err(LinopError::InvalidInterval { lower, upper });
        }
        Ok(Self { lower, upper })
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// True when the interval has collapsed to a single point, i.e. every
    /// eigenvalue is known exactly.
    pub fn is_degenerate(&self) -> bool {
        self.lower == self.upper
    }
}

impl fmt::Display for SpectralInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lower, self.upper)
    }
}

#[derive(Debug)]
pub enum LinopError {
    DimensionMismatch { expected: usize, got: usize },
    NotSquare { rows: usize, cols: usize },
    IndexOutOfBounds { row: usize, col: usize, rows: usize, cols: usize },
    DimensionTooLarge { rows: usize, cols: usize },
    InvalidInterval { lower: f64, upper: f64 },
    ZeroIterations,
    DegenerateOperator,
}

impl fmt::Display for LinopError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinopError::DimensionMismatch { expected, got } => {
                write!(f, "vector length {got} does not match operator dimension {expected}")
            }
            LinopError::NotSquare { rows, cols } => {
                write!(f, "operation requires a square matrix, got {rows}x{cols}")
            }
            LinopError::IndexOutOfBounds { row, col, rows, cols } => {
                write!(f, "entry ({row}, {col}) outside declared shape {rows}x{cols}")
            }
            LinopError::DimensionTooLarge { rows, cols } => {
                write!(f, "shape {rows}x{cols} exceeds the u32 index limit")
            }
            LinopError::InvalidInterval { lower, upper } => {
                write!(f, "invalid spectral interval [{lower}, {upper}]")
            }
            LinopError::ZeroIterations => write!(f, "power iteration needs at least one iteration"),
            LinopError::DegenerateOperator => {
                write!(f, "operator is numerically zero; no spectral norm estimate")
            }
        }
    }
}

impl std::error::Error for LinopError {}

/// Implicit access to a symmetric matrix: a dimension plus the map
/// `x -> A x`. `apply_into` must be deterministic for a fixed operand and
/// linear up to floating-point rounding.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// Writes `A x` into `out`. Panics if slice lengths differ from `dim()`;
    /// callers validate dimensions at API boundaries.
    fn apply_into(&self, x: &[f64], out: &mut [f64]);

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(x, &mut out);
        out
    }
}

/// Compressed sparse row matrix with column-sorted rows. Duplicate
/// coordinates are summed at construction; symmetric input has been mirrored
/// onto both triangles when `stored_symmetric()` reports true.
///
/// Column indices are stored as `u32` (matvec is memory-bound; 12 bytes per
/// stored entry instead of 16 is a measurable win at large dimensions),
/// which caps the dimension at `u32::MAX`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseMatrix {
    /// Builds a matrix from coordinate triplets. With `mirror_symmetric` every
    /// off-diagonal entry is reflected across the diagonal before assembly
    /// (Matrix Market `symmetric` semantics); duplicates at the same position
    /// are summed either way.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
        mirror_symmetric: bool,
    ) -> Result<Self, LinopError> {
        if mirror_symmetric && rows != cols {
            return Err(LinopError::NotSquare { rows, cols });
        }
        if rows > u32::MAX as usize || cols > u32::MAX as usize {
            return Err(LinopError::DimensionTooLarge { rows, cols });
        }
        let mut entries: Vec<(u32, u32, f64)> = Vec::new();
        for (r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(LinopError::IndexOutOfBounds { row: r, col: c, rows, cols });
            }
            entries.push((r as u32, c as u32, v));
            if mirror_symmetric && r != c {
                entries.push((c as u32, r as u32, v));
            }
        }
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut counts = vec![0usize; rows];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut last: Option<(u32, u32)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                counts[r as usize] += 1;
                last = Some((r, c));
            }
        }
        let mut row_ptr = vec![0usize; rows + 1];
        for r in 0..rows {
            row_ptr[r + 1] = row_ptr[r] + counts[r];
        }
        Ok(Self { rows, cols, row_ptr, col_idx, values, symmetric: mirror_symmetric })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            rows: d,
            cols: d,
            row_ptr: (0..=d).collect(),
            col_idx: (0..d as u32).collect(),
            values: vec![1.0; d],
            symmetric: true,
        }
    }

    /// Dense row-major constructor, mostly for tests and small examples.
    pub fn from_dense(rows: usize, cols: usize, data: &[f64]) -> Result<Self, LinopError> {
        assert_eq!(data.len(), rows * cols, "dense data length mismatch");
        let triplets = (0..rows).flat_map(|i| {
            (0..cols).filter_map(move |j| {
                let v = data[i * cols + j];
                (v != 0.0).then_some((i, j, v))
            })
        });
        Self::from_triplets(rows, cols, triplets, false)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn stored_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Iterates stored entries as `(row, col, value)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1])
                .map(move |k| (r, self.col_idx[k] as usize, self.values[k]))
        })
    }

    pub fn transpose(&self) -> SparseMatrix {
        let triplets: Vec<_> = self.entries().map(|(r, c, v)| (c, r, v)).collect();
        let mut t = SparseMatrix::from_triplets(self.cols, self.rows, triplets, false)
            .expect("transpose preserves bounds");
        t.symmetric = self.symmetric;
        t
    }

    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols, "matvec input length");
        assert_eq!(out.len(), self.rows, "matvec output length");
        for r in 0..self.rows {
            let (start, end) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let mut acc = 0.0;
            for (v, &c) in self.values[start..end].iter().zip(&self.col_idx[start..end]) {
                acc += v * x[c as usize];
            }
            out[r] = acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, LinopError> {
        if x.len() != self.cols {
            return Err(LinopError::DimensionMismatch { expected: self.cols, got: x.len() });
        }
        let mut out = vec![0.0; self.rows];
        self.matvec_into(x, &mut out);
        Ok(out)
    }

    /// Maximum absolute row sum.
    pub fn infinity_norm(&self) -> f64 {
        let mut best = 0.0f64;
        for r in 0..self.rows {
            let s: f64 =
                (self.row_ptr[r]..self.row_ptr[r + 1]).map(|k| self.values[k].abs()).sum();
            best = best.max(s);
        }
        best
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let mut sums = vec![0.0f64; self.cols];
        for (_, c, v) in self.entries() {
            sums[c] += v.abs();
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    /// Eigenvalue enclosure from diagonal entries plus off-diagonal absolute
    /// row sums. Requires a square (symmetric) matrix.
    pub fn gershgorin_interval(&self) -> Result<SpectralInterval, LinopError> {
        if !self.is_square() {
            return Err(LinopError::NotSquare { rows: self.rows, cols: self.cols });
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in 0..self.rows {
            let mut diag = 0.0;
            let mut radius = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.col_idx[k] as usize == r {
                    diag += self.values[k];
                } else {
                    radius += self.values[k].abs();
                }
            }
            lo = lo.min(diag - radius);
            hi = hi.max(diag + radius);
        }
        if self.rows == 0 {
            return SpectralInterval::new(0.0, 0.0);
        }
        SpectralInterval::new(lo, hi)
    }
}

impl LinearOperator for SparseMatrix {
    fn dim(&self) -> usize {
        debug_assert!(self.is_square(), "operator view requires square matrix");
        self.rows
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.matvec_into(x, out);
    }
}

/// The map `x -> C^T (C x)`: symmetric positive semi-definite by
/// construction, with eigenvalues the squared singular values of `C`. The
/// transpose is materialized once so both products are row-major sweeps.
pub struct GramOperator<'a> {
    base: &'a SparseMatrix,
    base_t: SparseMatrix,
}

impl<'a> GramOperator<'a> {
    pub fn new(c: &'a SparseMatrix) -> Self {
        Self { base: c, base_t: c.transpose() }
    }
}

pub fn gram_operator(c: &SparseMatrix) -> GramOperator<'_> {
    GramOperator::new(c)
}

impl LinearOperator for GramOperator<'_> {
    fn dim(&self) -> usize {
        self.base.cols
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let mut mid = vec![0.0; self.base.rows];
        self.base.matvec_into(x, &mut mid);
        self.base_t.matvec_into(&mid, out);
    }
}

/// `x -> mul * (A x) + add * x`; covers the spectral rescaling used by the
/// log-determinant estimator and the shift-scale reduction of the positive
/// definiteness test without materializing anything.
pub struct AffineOperator<'a> {
    inner: &'a dyn LinearOperator,
    mul: f64,
    add: f64,
}

impl<'a> AffineOperator<'a> {
    pub fn new(inner: &'a dyn LinearOperator, mul: f64, add: f64) -> Self {
        Self { inner, mul, add }
    }
}

impl LinearOperator for AffineOperator<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.inner.apply_into(x, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o = self.mul * *o + self.add * *xi;
        }
    }
}

/// Diagonal operator; handy for spectrum-controlled tests.
pub struct DiagonalOperator {
    diag: Vec<f64>,
}

impl DiagonalOperator {
    pub fn new(diag: Vec<f64>) -> Self {
        Self { diag }
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }
}

impl LinearOperator for DiagonalOperator {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, xi), di) in out.iter_mut().zip(x).zip(&self.diag) {
            *o = di * xi;
        }
    }
}

/// Number of power iterations that guarantee a spectral-norm estimate within
/// `eps/2` relative error with probability at least `1 - zeta/2`, following
/// the Klein-Lu bound for a normally distributed start vector.
pub fn klein_lu_iterations(d: usize, eps: f64, zeta: f64) -> usize {
    let d = d.max(1) as f64;
    let raw = (2.0 / eps) * ((2.0 * d).ln().powi(2) + (8.0 / (eps * zeta * zeta)).ln());
    raw.ceil() as usize
}

/// Estimates the spectral norm of a symmetric operator by `iters` power
/// iterations from a normally distributed start vector, returning the
/// absolute Rayleigh quotient of the final iterate. Start vectors with norm
/// below 1e-300 are resampled.
pub fn power_iteration_top(
    op: &dyn LinearOperator,
    iters: usize,
    rng: &mut impl Rng,
) -> Result<f64, LinopError> {
    if iters == 0 {
        return Err(LinopError::ZeroIterations);
    }
    let d = op.dim();
    let mut v = vec![0.0f64; d];
    loop {
        for vi in v.iter_mut() {
            *vi = StandardNormal.sample(rng);
        }
        if norm2(&v) > 1e-300 {
            break;
        }
    }
    normalize(&mut v);
    let mut w = vec![0.0f64; d];
    for _ in 0..iters {
        op.apply_into(&v, &mut w);
        let nw = norm2(&w);
        if nw <= 1e-300 {
            // operator annihilated the iterate; norm estimate is zero
            return Err(LinopError::DegenerateOperator);
        }
        std::mem::swap(&mut v, &mut w);
        normalize(&mut v);
    }
    op.apply_into(&v, &mut w);
    let rayleigh = dot(&v, &w);
    Ok(rayleigh.abs())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn normalize(v: &mut [f64]) {
    let n = norm2(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

//! Stochastic Chebyshev estimators for spectral sums `tr(f(A))` of large
//! symmetric matrices: log-determinant, trace of the inverse, Estrada index,
//! Schatten p-norms, and property-testing positive definiteness.
//!
//! The pipeline couples Chebyshev interpolation of the scalar function with
//! Hutchinson's stochastic trace estimator, so every estimator touches the
//! matrix only through matrix-vector products. With the default `parallel`
//! feature the probe loop runs on rayon; the sequential loop is always
//! available and produces bit-identical results.

pub mod chebyshev;
pub mod engine;
pub mod funcs;
pub mod hutchinson;
pub mod linop;
pub mod market;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod synth;

pub use engine::{estimate_spectral_sum, EstimateResult};
pub use hutchinson::{ProbeConfig, ProbeDistribution};
pub use linop::{LinearOperator, SparseMatrix, SpectralInterval};

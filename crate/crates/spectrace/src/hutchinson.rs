//! Probe-vector generation and plain stochastic trace estimation.
//!
//! Probes are derived counter-style from `(seed, index)`: each index keys
//! its own ChaCha stream, so a probe is bit-identical no matter which worker
//! draws it or in what order. Rademacher is the default distribution (it has
//! the smallest variance among zero-mean unit-covariance choices); Gaussian
//! is kept for comparison runs.

use crate::engine::{EngineError, EstimateResult};
use crate::linop::{dot, LinearOperator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::fmt;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeDistribution {
    Rademacher,
    Gaussian,
}

/// How to draw probe vectors: distribution, sample count `m`, and the seed
/// that every probe stream is derived from.
#[derive(Clone, Copy, Debug)]
pub struct ProbeConfig {
    pub distribution: ProbeDistribution,
    pub count: usize,
    pub seed: u64,
}

impl ProbeConfig {
    pub fn rademacher(count: usize, seed: u64) -> Self {
        assert!(count >= 1, "probe count must be at least 1");
        Self { distribution: ProbeDistribution::Rademacher, count, seed }
    }

    pub fn gaussian(count: usize, seed: u64) -> Self {
        assert!(count >= 1, "probe count must be at least 1");
        Self { distribution: ProbeDistribution::Gaussian, count, seed }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Writes probe `index` of the stream defined by `cfg` into `out`.
/// Deterministic in `(seed, index)` and independent of worker scheduling.
pub fn fill_probe(cfg: &ProbeConfig, index: usize, out: &mut [f64]) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    match cfg.distribution {
        ProbeDistribution::Rademacher => {
            for o in out.iter_mut() {
                *o = if rng.random::<bool>() { 1.0 } else { -1.0 };
            }
        }
        ProbeDistribution::Gaussian => {
            for o in out.iter_mut() {
                *o = StandardNormal.sample(&mut rng);
            }
        }
    }
}

pub fn make_probe(d: usize, cfg: &ProbeConfig, index: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    fill_probe(cfg, index, &mut v);
    v
}

/// Plain Hutchinson estimator `tr_m(B) = (1/m) sum_i v_i^T B v_i`. Unbiased
/// for `tr(B)`; per-probe quadratic forms are retained so callers can build
/// confidence intervals without rerunning.
pub fn plain_trace_estimate(
    op: &dyn LinearOperator,
    cfg: &ProbeConfig,
) -> Result<EstimateResult, EngineError> {
    let started = Instant::now();
    let d = op.dim();
    if d == 0 {
        return Err(EngineError::ZeroDimension);
    }
    if cfg.count == 0 {
        return Err(EngineError::NoProbes);
    }

    let quad = |buf: &mut (Vec<f64>, Vec<f64>), i: usize| {
        let (v, y) = buf;
        fill_probe(cfg, i, v);
        op.apply_into(v, y);
        dot(v, y)
    };

    #[cfg(feature = "parallel")]
    let per_probe = {
        use rayon::prelude::*;
        let mut per_probe = Vec::with_capacity(cfg.count);
        (0..cfg.count)
            .into_par_iter()
            .map_init(|| (vec![0.0; d], vec![0.0; d]), |buf, i| quad(buf, i))
            .collect_into_vec(&mut per_probe);
        per_probe
    };
    #[cfg(not(feature = "parallel"))]
    let per_probe = {
        let mut buf = (vec![0.0; d], vec![0.0; d]);
        (0..cfg.count).map(|i| quad(&mut buf, i)).collect::<Vec<_>>()
    };

    Ok(EstimateResult::from_per_probe(per_probe, 0, None, cfg.seed, started))
}

#[derive(Debug)]
pub enum HutchinsonError {
    ArgumentOutOfRange { name: &'static str, value: f64 },
}

impl fmt::Display for HutchinsonError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HutchinsonError::ArgumentOutOfRange { name, value } => {
                write!(f, "{name} = {value} must lie in (0, 1)")
            }
        }
    }
}

impl std::error::Error for HutchinsonError {}

/// Sample count `ceil(6 eps^-2 ln(2/zeta))` that makes the Hutchinson
/// estimate of a positive (or negative) semi-definite matrix an
/// eps-multiplicative approximation with probability at least `1 - zeta`.
pub fn required_samples_psd(eps: f64, zeta: f64) -> Result<usize, HutchinsonError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(HutchinsonError::ArgumentOutOfRange { name: "eps", value: eps });
    }
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(HutchinsonError::ArgumentOutOfRange { name: "zeta", value: zeta });
    }
    Ok((6.0 / (eps * eps) * (2.0 / zeta).ln()).ceil() as usize)
}

//! The fused stochastic Chebyshev trace estimator: averages `v^T p(A) v`
//! over random probes, where `p(A) v` is built by the three-term vector
//! recurrence so `p(A)` is never materialized.
//!
//! Probes are independent; with the `parallel` feature they run on rayon
//! workers that each own private workspace vectors and write their
//! quadratic form to a disjoint slot. The final mean is always accumulated
//! sequentially in probe-index order, so parallel and sequential runs are
//! bit-identical.

use crate::chebyshev::ChebyshevInterpolant;
use crate::hutchinson::{fill_probe, ProbeConfig};
use crate::linop::{dot, LinearOperator, SpectralInterval};
use std::fmt;
use std::time::{Duration, Instant};

#[derive(Debug)]
pub enum EngineError {
    ZeroDimension,
    NoProbes,
    DegenerateInterval { at: f64 },
    IntervalMismatch { interpolant: SpectralInterval, requested: SpectralInterval },
}

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineError::ZeroDimension => write!(f, "operator dimension must be positive"),
            EngineError::NoProbes => write!(f, "probe count must be at least 1"),
            EngineError::DegenerateInterval { at } => {
                write!(f, "interval degenerate at {at}; the spectral sum is d*f({at}) exactly")
            }
            EngineError::IntervalMismatch { interpolant, requested } => {
                write!(f, "interpolant built on {interpolant} but estimate requested on {requested}")
            }
        }
    }
}

impl std::error::Error for EngineError {}

/// Outcome of a stochastic trace estimate: the estimate is the mean of the
/// per-probe quadratic forms (taken in probe-index order), and `sample_std`
/// is their unbiased standard deviation (zero when `m == 1`).
#[derive(Clone, Debug)]
pub struct EstimateResult {
    pub estimate: f64,
    pub per_probe: Vec<f64>,
    pub sample_std: f64,
    pub m: usize,
    pub n: usize,
    pub interval: Option<SpectralInterval>,
    pub seed: u64,
    pub wall_time: Duration,
}

impl EstimateResult {
    pub(crate) fn from_per_probe(
        per_probe: Vec<f64>,
        n: usize,
        interval: Option<SpectralInterval>,
        seed: u64,
        started: Instant,
    ) -> Self {
        let m = per_probe.len();
        let estimate = per_probe.iter().sum::<f64>() / m as f64;
        let sample_std = if m > 1 {
            let ss: f64 = per_probe.iter().map(|&q| (q - estimate) * (q - estimate)).sum();
            (ss / (m - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            estimate,
            per_probe,
            sample_std,
            m,
            n,
            interval,
            seed,
            wall_time: started.elapsed(),
        }
    }

    /// Exact result for the degenerate case where every eigenvalue is known
    /// to equal a single point and the spectral sum is `d * f(a)`.
    pub(crate) fn exact(value: f64, m: usize, n: usize, at: f64, seed: u64, started: Instant) -> Self {
        Self {
            estimate: value,
            per_probe: vec![value; m],
            sample_std: 0.0,
            m,
            n,
            interval: Some(SpectralInterval { lower: at, upper: at }),
            seed,
            wall_time: started.elapsed(),
        }
    }
}

struct Workspace {
    probe: Vec<f64>,
    w_prev: Vec<f64>,
    w_cur: Vec<f64>,
    w_next: Vec<f64>,
    acc: Vec<f64>,
}

impl Workspace {
    fn new(d: usize) -> Self {
        Self {
            probe: vec![0.0; d],
            w_prev: vec![0.0; d],
            w_cur: vec![0.0; d],
            w_next: vec![0.0; d],
            acc: vec![0.0; d],
        }
    }
}

/// One probe: draws `v` from `(seed, index)`, runs the vector recurrence
/// `w_0 = v`, `w_1 = (2A/(b-a) - (b+a)/(b-a) I) v`,
/// `w_{j+1} = 2 (2A/(b-a) - (b+a)/(b-a) I) w_j - w_{j-1}`,
/// accumulating `u += c_j w_j`, and returns `v . u`. Exactly `n` operator
/// applications.
fn probe_quadratic_form(
    op: &dyn LinearOperator,
    coeffs: &[f64],
    scale: f64,
    shift: f64,
    cfg: &ProbeConfig,
    index: usize,
    ws: &mut Workspace,
) -> f64 {
    let n = coeffs.len() - 1;
    fill_probe(cfg, index, &mut ws.probe);
    ws.w_prev.copy_from_slice(&ws.probe);
    for (a, v) in ws.acc.iter_mut().zip(&ws.probe) {
        *a = coeffs[0] * v;
    }
    if n == 0 {
        return dot(&ws.probe, &ws.acc);
    }
    op.apply_into(&ws.probe, &mut ws.w_cur);
    for (w, v) in ws.w_cur.iter_mut().zip(&ws.probe) {
        *w = scale * *w - shift * v;
    }
    for (a, w) in ws.acc.iter_mut().zip(&ws.w_cur) {
        *a += coeffs[1] * w;
    }
    for &c in &coeffs[2..] {
        op.apply_into(&ws.w_cur, &mut ws.w_next);
        for ((next, cur), prev) in ws.w_next.iter_mut().zip(&ws.w_cur).zip(&ws.w_prev) {
            *next = 2.0 * (scale * *next - shift * cur) - prev;
        }
        for (a, w) in ws.acc.iter_mut().zip(&ws.w_next) {
            *a += c * w;
        }
        std::mem::swap(&mut ws.w_prev, &mut ws.w_cur);
        std::mem::swap(&mut ws.w_cur, &mut ws.w_next);
    }
    dot(&ws.probe, &ws.acc)
}

fn validate(
    op: &dyn LinearOperator,
    interval: SpectralInterval,
    p: &ChebyshevInterpolant,
    cfg: &ProbeConfig,
) -> Result<(f64, f64), EngineError> {
    if op.dim() == 0 {
        return Err(EngineError::ZeroDimension);
    }
    if cfg.count == 0 {
        return Err(EngineError::NoProbes);
    }
    if interval.is_degenerate() {
        return Err(EngineError::DegenerateInterval { at: interval.lower });
    }
    if p.interval() != interval {
        return Err(EngineError::IntervalMismatch {
            interpolant: p.interval(),
            requested: interval,
        });
    }
    let scale = 2.0 / interval.width();
    let shift = (interval.lower + interval.upper) / interval.width();
    Ok((scale, shift))
}

/// Estimates `tr(p(A))` for a symmetric operator with spectrum inside
/// `interval`, using `cfg.count` probes and exactly `cfg.count * p.degree()`
/// operator applications. Unbiased for `tr(p(A))`; dispatches to the rayon
/// probe pool when the `parallel` feature is active.
pub fn estimate_spectral_sum(
    op: &dyn LinearOperator,
    interval: SpectralInterval,
    p: &ChebyshevInterpolant,
    cfg: &ProbeConfig,
) -> Result<EstimateResult, EngineError> {
    #[cfg(feature = "parallel")]
    {
        estimate_spectral_sum_par(op, interval, p, cfg)
    }
    #[cfg(not(feature = "parallel"))]
    {
        estimate_spectral_sum_seq(op, interval, p, cfg)
    }
}

/// Sequential probe loop; always available and bit-identical to the
/// parallel path.
pub fn estimate_spectral_sum_seq(
    op: &dyn LinearOperator,
    interval: SpectralInterval,
    p: &ChebyshevInterpolant,
    cfg: &ProbeConfig,
) -> Result<EstimateResult, EngineError> {
    let started = Instant::now();
    let (scale, shift) = validate(op, interval, p, cfg)?;
    let mut ws = Workspace::new(op.dim());
    let per_probe: Vec<f64> = (0..cfg.count)
        .map(|i| probe_quadratic_form(op, p.coefficients(), scale, shift, cfg, i, &mut ws))
        .collect();
    Ok(EstimateResult::from_per_probe(per_probe, p.degree(), Some(interval), cfg.seed, started))
}

/// Rayon probe pool: each worker owns a private workspace, per-probe results
/// land in disjoint slots, and the reduction stays in index order.
#[cfg(feature = "parallel")]
pub fn estimate_spectral_sum_par(
    op: &dyn LinearOperator,
    interval: SpectralInterval,
    p: &ChebyshevInterpolant,
    cfg: &ProbeConfig,
) -> Result<EstimateResult, EngineError> {
    use rayon::prelude::*;

    let started = Instant::now();
    let (scale, shift) = validate(op, interval, p, cfg)?;
    let d = op.dim();
    let mut per_probe = Vec::with_capacity(cfg.count);
    (0..cfg.count)
        .into_par_iter()
        .map_init(
            || Workspace::new(d),
            |ws, i| probe_quadratic_form(op, p.coefficients(), scale, shift, cfg, i, ws),
        )
        .collect_into_vec(&mut per_probe);
    Ok(EstimateResult::from_per_probe(per_probe, p.degree(), Some(interval), cfg.seed, started))
}

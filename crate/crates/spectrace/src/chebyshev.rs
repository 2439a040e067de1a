//! Scalar Chebyshev interpolation on an arbitrary interval, plus the
//! Bernstein-ellipse error bound that drives the parameter planners.
//!
//! Coefficients come from direct summation over the interpolation nodes,
//! with `T_j(x_k) = cos(j (k+1/2) pi / (n+1))` evaluated in closed form
//! (exact at the nodes). Scalar evaluation defaults to Clenshaw summation;
//! the explicit three-term recurrence is kept alongside because the matrix
//! engine uses the same recurrence on vectors.

use crate::linop::SpectralInterval;
use std::f64::consts::PI;
use std::fmt;

#[derive(Debug)]
pub enum ChebyshevError {
    EmptyInterval { lower: f64, upper: f64 },
    NonFiniteSample { x: f64 },
    InvalidEllipse(&'static str),
    MissingLowerBound,
}

impl fmt::Display for ChebyshevError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChebyshevError::EmptyInterval { lower, upper } => {
                write!(f, "interpolation interval [{lower}, {upper}] must satisfy lower < upper")
            }
            ChebyshevError::NonFiniteSample { x } => {
                write!(f, "function value at node {x} is not finite")
            }
            ChebyshevError::InvalidEllipse(msg) => write!(f, "{msg}"),
            ChebyshevError::MissingLowerBound => {
                write!(f, "sign-definiteness check needs a positive lower bound on |f|")
            }
        }
    }
}

impl std::error::Error for ChebyshevError {}

/// Chebyshev nodes `x_k = cos(pi (k + 1/2) / (n+1))`, `k = 0..=n`:
/// the roots of `T_{n+1}`, strictly decreasing in `k`.
pub fn nodes(n: usize) -> Vec<f64> {
    let count = n + 1;
    (0..count).map(|k| (PI * (k as f64 + 0.5) / count as f64).cos()).collect()
}

/// Degree-n Chebyshev interpolant of a function on `[lower, upper]`,
/// stored as coefficients of `T_j` composed with the linear map back to
/// `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChebyshevInterpolant {
    interval: SpectralInterval,
    coeffs: Vec<f64>,
}

impl ChebyshevInterpolant {
    /// Interpolates `f` at the n+1 mapped Chebyshev nodes. Fails if the
    /// interval is degenerate or `f` is non-finite at any node.
    pub fn interpolate(
        f: impl Fn(f64) -> f64,
        n: usize,
        interval: SpectralInterval,
    ) -> Result<Self, ChebyshevError> {
        if !(interval.lower < interval.upper) {
            return Err(ChebyshevError::EmptyInterval {
                lower: interval.lower,
                upper: interval.upper,
            });
        }
        let count = n + 1;
        let half_width = interval.width() / 2.0;
        let center = (interval.lower + interval.upper) / 2.0;
        let mut samples = Vec::with_capacity(count);
        for k in 0..count {
            let theta = PI * (k as f64 + 0.5) / count as f64;
            let x = half_width * theta.cos() + center;
            let fx = f(x);
            if !fx.is_finite() {
                return Err(ChebyshevError::NonFiniteSample { x });
            }
            samples.push((theta, fx));
        }
        let mut coeffs = Vec::with_capacity(count);
        for j in 0..count {
            let sum: f64 = samples.iter().map(|&(theta, fx)| fx * (j as f64 * theta).cos()).sum();
            let factor = if j == 0 { 1.0 } else { 2.0 };
            coeffs.push(factor / count as f64 * sum);
        }
        Ok(Self { interval, coeffs })
    }

    /// Wraps an explicit coefficient vector `c_0..c_n`.
    pub fn from_coefficients(
        coeffs: Vec<f64>,
        interval: SpectralInterval,
    ) -> Result<Self, ChebyshevError> {
        if !(interval.lower < interval.upper) {
            return Err(ChebyshevError::EmptyInterval {
                lower: interval.lower,
                upper: interval.upper,
            });
        }
        assert!(!coeffs.is_empty(), "need at least the constant coefficient");
        Ok(Self { interval, coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn interval(&self) -> SpectralInterval {
        self.interval
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    fn map_to_unit(&self, x: f64) -> f64 {
        (2.0 * x - (self.interval.lower + self.interval.upper)) / self.interval.width()
    }

    /// Evaluates by Clenshaw summation. Arguments outside the interval are
    /// allowed (no accuracy guarantee there); the positive-definiteness
    /// reduction can push mapped eigenvalues a few ulps past the endpoints.
    pub fn evaluate(&self, x: f64) -> f64 {
        let t = self.map_to_unit(x);
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &c in self.coeffs[1..].iter().rev() {
            let b = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b;
        }
        t * b1 - b2 + self.coeffs[0]
    }

    /// Evaluates by the forward `T_{j+1} = 2 x T_j - T_{j-1}` recurrence;
    /// kept as the cross-check against Clenshaw and as the scalar mirror of
    /// the engine's vector recurrence.
    pub fn evaluate_recurrence(&self, x: f64) -> f64 {
        let t = self.map_to_unit(x);
        let mut acc = self.coeffs[0];
        if self.coeffs.len() == 1 {
            return acc;
        }
        let mut t_prev = 1.0;
        let mut t_cur = t;
        acc += self.coeffs[1] * t_cur;
        for &c in &self.coeffs[2..] {
            let t_next = 2.0 * t * t_cur - t_prev;
            acc += c * t_next;
            t_prev = t_cur;
            t_cur = t_next;
        }
        acc
    }
}

/// Analyticity data for the Bernstein ellipse with foci -1, +1: `rho` is the
/// sum of the semi-axes, `sup_abs` bounds `|f(g(z))|` over the ellipse, and
/// `inf_abs`, when present, lower-bounds `|f|` on the target interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipseBound {
    pub rho: f64,
    pub sup_abs: f64,
    pub inf_abs: Option<f64>,
}

impl EllipseBound {
    pub fn new(rho: f64, sup_abs: f64) -> Result<Self, ChebyshevError> {
        if !(rho > 1.0) || !rho.is_finite() {
            return Err(ChebyshevError::InvalidEllipse("ellipse parameter rho must exceed 1"));
        }
        if !(sup_abs > 0.0) {
            return Err(ChebyshevError::InvalidEllipse("ellipse bound U must be positive"));
        }
        Ok(Self { rho, sup_abs, inf_abs: None })
    }

    pub fn with_inf_abs(mut self, inf_abs: f64) -> Result<Self, ChebyshevError> {
        if !(inf_abs >= 0.0) {
            return Err(ChebyshevError::InvalidEllipse("lower bound L must be non-negative"));
        }
        self.inf_abs = Some(inf_abs);
        Ok(self)
    }
}

/// The uniform interpolation-error bound `4 U / ((rho - 1) rho^n)`.
pub fn uniform_error_bound(bound: &EllipseBound, n: usize) -> f64 {
    4.0 * bound.sup_abs / ((bound.rho - 1.0) * bound.rho.powi(n as i32))
}

/// True when `4U/((rho-1) rho^n) <= L`, certifying that the degree-n
/// interpolant keeps the sign of `f` on the whole interval.
pub fn nonnegativity_check(bound: &EllipseBound, n: usize) -> Result<bool, ChebyshevError> {
    match bound.inf_abs {
        Some(l) if l > 0.0 => Ok(uniform_error_bound(bound, n) <= l),
        _ => Err(ChebyshevError::MissingLowerBound),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn iv(a: f64, b: f64) -> SpectralInterval {
        SpectralInterval::new(a, b).unwrap()
    }

    #[test]
    fn node_closed_forms() {
        assert_eq!(nodes(0), vec![(PI / 2.0).cos()]);
        let n1 = nodes(1);
        assert_relative_eq!(n1[0], 0.70710678118654757, max_relative = 1e-15);
        assert_relative_eq!(n1[1], -0.70710678118654746, max_relative = 1e-15);
        assert!(nodes(2)[1].abs() < 1e-16);
        // strictly decreasing, inside (-1, 1)
        let ns = nodes(9);
        for w in ns.windows(2) {
            assert!(w[0] > w[1]);
        }
        assert!(ns.iter().all(|x| x.abs() < 1.0));
    }

    #[test]
    fn constant_function_coefficients() {
        let p = ChebyshevInterpolant::interpolate(|_| 1.0, 7, iv(-3.0, 5.0)).unwrap();
        assert_relative_eq!(p.coefficients()[0], 1.0, max_relative = 1e-14);
        for &c in &p.coefficients()[1..] {
            assert!(c.abs() < 1e-14);
        }
    }

    #[test]
    fn linear_function_coefficients() {
        let p = ChebyshevInterpolant::interpolate(|x| x, 4, iv(-1.0, 1.0)).unwrap();
        assert!(p.coefficients()[0].abs() < 1e-15);
        assert_relative_eq!(p.coefficients()[1], 1.0, max_relative = 1e-14);
        for &c in &p.coefficients()[2..] {
            assert!(c.abs() < 1e-14);
        }
    }

    #[test]
    fn log_coefficients_match_reference() {
        // frozen from a 50-digit direct summation of the coefficient formula
        // for ln on [0.1, 0.9], n = 14; the absolute tolerance covers f64
        // summation noise in the 15-term sums
        let expected = [
            -0.9162907318120669,
            0.999999999841499,
            -0.2499999997193559,
            0.083333332774383,
            -0.03124999885033285,
            0.012499997614151133,
            -0.0052083283654711645,
            0.002232132490724388,
            -0.000976540825392254,
            0.00043398236462182765,
            -0.00019521713252292018,
            8.857763552850275e-05,
            -4.0266248904251265e-05,
            1.7882472244731793e-05,
            -6.811959400935857e-06,
        ];
        let p = ChebyshevInterpolant::interpolate(f64::ln, 14, iv(0.1, 0.9)).unwrap();
        for (got, want) in p.coefficients().iter().zip(expected) {
            assert_relative_eq!(*got, want, max_relative = 1e-9, epsilon = 1e-13);
        }
    }

    #[test]
    fn quadratic_is_exact_at_degree_two() {
        let p = ChebyshevInterpolant::interpolate(|x| x * x, 2, iv(-1.0, 1.0)).unwrap();
        assert_relative_eq!(p.evaluate(0.5), 0.25, epsilon = 1e-14);
    }

    #[test]
    fn interpolation_property_at_nodes() {
        let interval = iv(0.1, 0.9);
        let p = ChebyshevInterpolant::interpolate(f64::ln, 14, interval).unwrap();
        let half = interval.width() / 2.0;
        let center = (interval.lower + interval.upper) / 2.0;
        for xk in nodes(14) {
            let x = half * xk + center;
            assert!((p.evaluate(x) - x.ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn log_value_within_bound() {
        // rho and U for ln on [0.1, 0.9] from the log-determinant planner proof
        let delta = 0.1f64;
        let rho = ((2.0 - delta).sqrt() + delta.sqrt()) / ((2.0 - delta).sqrt() - delta.sqrt());
        let bound = EllipseBound::new(rho, 5.0 * (2.0 / delta).ln()).unwrap();
        let p = ChebyshevInterpolant::interpolate(f64::ln, 14, iv(0.1, 0.9)).unwrap();
        let err = (p.evaluate(0.5) - 0.5f64.ln()).abs();
        assert!(err <= uniform_error_bound(&bound, 14));
    }

    #[test]
    fn degenerate_interval_rejected() {
        let r = ChebyshevInterpolant::interpolate(|x| x, 3, iv(2.0, 2.0));
        assert!(matches!(r, Err(ChebyshevError::EmptyInterval { .. })));
    }

    #[test]
    fn non_finite_sample_rejected() {
        let r = ChebyshevInterpolant::interpolate(f64::ln, 3, iv(-1.0, 1.0));
        assert!(matches!(r, Err(ChebyshevError::NonFiniteSample { .. })));
    }

    #[test]
    fn error_bound_arithmetic() {
        let b = EllipseBound::new(2.0, 1.0).unwrap();
        assert_relative_eq!(uniform_error_bound(&b, 3), 0.5, epsilon = 1e-15);
        // one more degree halves the bound at rho = 2
        assert_relative_eq!(
            uniform_error_bound(&b, 4),
            uniform_error_bound(&b, 3) / 2.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn nonnegativity_thresholds() {
        let b = EllipseBound::new(2.0, 1.0).unwrap();
        assert!(matches!(nonnegativity_check(&b, 3), Err(ChebyshevError::MissingLowerBound)));
        let b1 = b.with_inf_abs(1.0).unwrap();
        assert!(nonnegativity_check(&b1, 3).unwrap()); // 0.5 <= 1
        let b2 = b.with_inf_abs(0.4).unwrap();
        assert!(!nonnegativity_check(&b2, 3).unwrap()); // 0.5 > 0.4
        assert!(nonnegativity_check(&b2, 4).unwrap()); // 0.25 <= 0.4
    }

    #[test]
    fn invalid_ellipse_rejected() {
        assert!(EllipseBound::new(1.0, 1.0).is_err());
        assert!(EllipseBound::new(2.0, 0.0).is_err());
    }

    #[test]
    fn clenshaw_matches_recurrence() {
        let p = ChebyshevInterpolant::interpolate(f64::exp, 19, iv(-2.0, 3.0)).unwrap();
        for i in 0..=100 {
            let x = -2.0 + 5.0 * i as f64 / 100.0;
            let a = p.evaluate(x);
            let b = p.evaluate_recurrence(x);
            assert_relative_eq!(a, b, max_relative = 1e-10);
        }
    }
}

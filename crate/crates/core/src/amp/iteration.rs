//! Approximate message passing for the Huber (M)-estimator.
//!
//! ```text
//! R^t       = Y - X theta^t + Psi(R^{t-1}; r_{t-1})      (R^0 = Y)
//! r_t       : (1/n) sum Psi'(R^t_i; r_t) = 1/m
//! theta^t+1 = theta^t + m X' Psi(R^t; r_t)
//! ```
//!
//! At a fixed point `Psi(R; r) = r psi(Y - X theta)`, so `X' psi(Y - X theta) = 0`
//! and theta is the (M)-estimate.

use nalgebra::DVector;

use super::dataset::Dataset;
use crate::error::{invalid, Error, Result};
use crate::scalar::{regularized_psi, HuberTuning, RegularizedTuning};

#[derive(Debug, Clone, PartialEq)]
pub struct AmpState {
    pub theta: DVector<f64>,
    /// Adjusted residuals `R^t`.
    pub residual: DVector<f64>,
    pub r: f64,
    /// Iterations performed.
    pub t: usize,
    pub converged: bool,
    /// `r_t` for every iteration.
    pub r_trace: Vec<f64>,
    /// Empirical slope `(1/n) sum Psi'(R^t_i; r_t)` for every iteration; equals
    /// `1/m` unless `r_t` sits on a jump of the count.
    pub slope_trace: Vec<f64>,
}

/// Empirical average slope `(r/(1+r)) #{|R_i| <= lambda (1+r)} / n`.
pub fn empirical_slope(residual: &[f64], r: f64, lambda: f64) -> f64 {
    let cap = lambda * (1.0 + r);
    let inside = residual.iter().filter(|v| v.abs() <= cap).count();
    r / (1.0 + r) * inside as f64 / residual.len() as f64
}

/// Smallest `r > 0` at which the empirical slope reaches `1/m = p/n`.
///
/// The slope is nondecreasing and piecewise smooth in `r`: between jumps of
/// the count `k` it equals `1/m` at `r = p/(k - p)`. The left-most point
/// where the slope reaches `1/m` is either such an interior root or a jump,
/// where equality only holds in the bracket sense. `None` if unreachable.
pub fn empirical_slope_root(residual: &[f64], p: usize, lambda: f64) -> Option<f64> {
    let n = residual.len();
    if n <= p || residual.iter().any(|v| v.is_nan()) {
        return None;
    }
    if lambda.is_infinite() {
        return Some(p as f64 / (n - p) as f64);
    }
    // Count of |R_i| <= lambda (1+r) increases by one at each breakpoint.
    let mut breaks: Vec<f64> = residual.iter().map(|v| v.abs() / lambda - 1.0).collect();
    breaks.sort_unstable_by(|a, b| a.total_cmp(b));
    let mut k = breaks.partition_point(|&b| b <= 0.0);
    let mut start = 0.0;
    loop {
        let end = breaks.get(k).copied().unwrap_or(f64::INFINITY);
        if k > p {
            let root = (p as f64 / (k - p) as f64).max(start);
            if root < end {
                return Some(root);
            }
        }
        if k == n {
            return None;
        }
        // Jump to the next breakpoint, absorbing ties.
        start = end;
        while k < n && breaks[k] <= start {
            k += 1;
        }
    }
}

/// Runs AMP from `theta^0 = 0`, `R^0 = Y` until
/// `|theta^{t+1} - theta^t| / sqrt(p) <= tol` or `max_iter` steps.
pub fn amp_fit(data: &Dataset, lambda: f64, max_iter: usize, tol: f64) -> Result<AmpState> {
    if !(lambda > 0.0) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    let (n, p) = (data.n(), data.p());
    if n <= p {
        return Err(invalid(format!("need n > p, got n = {n}, p = {p}")));
    }
    let m = data.m();
    let huber = if lambda.is_infinite() { HuberTuning::least_squares() } else { HuberTuning::new(lambda)? };
    let sqrt_p = (p as f64).sqrt();

    let mut theta = DVector::zeros(p);
    let mut residual = data.y.clone();
    let mut r_trace = Vec::new();
    let mut slope_trace = Vec::new();
    let mut r = f64::NAN;
    for t in 0..max_iter {
        r = empirical_slope_root(residual.as_slice(), p, lambda)
            .ok_or(Error::SlopeInfeasible { iteration: t })?;
        r_trace.push(r);
        slope_trace.push(empirical_slope(residual.as_slice(), r, lambda));
        let tuning = RegularizedTuning::new(huber, r)?;
        let score = residual.map(|v| regularized_psi(v, tuning));
        let step = data.x.tr_mul(&score) * m;
        theta += &step;
        if !theta.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical(format!("AMP iterate not finite at iteration {t}")));
        }
        residual = &data.y - &data.x * &theta + score;
        if step.norm() / sqrt_p <= tol {
            return Ok(AmpState { theta, residual, r, t: t + 1, converged: true, r_trace, slope_trace });
        }
    }
    Ok(AmpState { theta, residual, r, t: max_iter, converged: false, r_trace, slope_trace })
}

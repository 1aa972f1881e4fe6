//! Scalar Huber loss and score, the regularized (effective) score, the
//! Gaussian and worst-case envelope functionals, and Huber's classical
//! minimax solution for location.
//!
//! Thresholds may be infinite: `f64::INFINITY` is the least-squares limit
//! (identity score) and every function here handles it explicitly.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::normal;
use crate::roots;

/// Threshold `lambda` of the Huber loss, in response units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HuberTuning {
    lambda: f64,
}

impl HuberTuning {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || lambda.is_nan() {
            return Err(invalid(format!("lambda must be positive, got {lambda}")));
        }
        if lambda.is_infinite() {
            return Err(invalid("use HuberTuning::least_squares() for an unbounded threshold"));
        }
        Ok(Self { lambda })
    }

    /// The unbounded threshold: quadratic loss, identity score.
    pub fn least_squares() -> Self {
        Self { lambda: f64::INFINITY }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_least_squares(&self) -> bool {
        self.lambda.is_infinite()
    }
}

/// Threshold together with the regularization `r` of the effective score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizedTuning {
    pub huber: HuberTuning,
    r: f64,
}

impl RegularizedTuning {
    pub fn new(huber: HuberTuning, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(invalid(format!("regularization r must be positive and finite, got {r}")));
        }
        Ok(Self { huber, r })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// `sup_z Psi'(z; r) = r / (1 + r)`.
    pub fn max_slope(&self) -> f64 {
        self.r / (1.0 + self.r)
    }
}

/// Huber loss: `z^2/2` on `|z| <= lambda`, `lambda |z| - lambda^2/2` beyond.
pub fn rho(z: f64, t: HuberTuning) -> f64 {
    let l = t.lambda;
    if z.abs() <= l {
        0.5 * z * z
    } else {
        l * z.abs() - 0.5 * l * l
    }
}

/// Huber score: `z` clipped to `[-lambda, lambda]`.
pub fn psi(z: f64, t: HuberTuning) -> f64 {
    clip(z, t.lambda)
}

/// Derivative of the score; the kink `|z| = lambda` counts as interior.
pub fn psi_prime(z: f64, t: HuberTuning) -> f64 {
    if z.abs() <= t.lambda {
        1.0
    } else {
        0.0
    }
}

/// Effective score `Psi(z; r) = r psi_lambda(z / (1 + r))`.
pub fn regularized_psi(z: f64, t: RegularizedTuning) -> f64 {
    t.r * clip(z / (1.0 + t.r), t.huber.lambda)
}

/// `Psi'(z; r) = r/(1+r) * 1{|z| <= lambda (1 + r)}`.
pub fn regularized_psi_prime(z: f64, t: RegularizedTuning) -> f64 {
    if z.abs() <= t.huber.lambda * (1.0 + t.r) {
        t.max_slope()
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn clip(z: f64, l: f64) -> f64 {
    z.clamp(-l, l)
}

/// `A(psi_k, Phi) = E psi_k(Z)^2`.
pub fn a_gauss(kappa: f64) -> f64 {
    if kappa.is_infinite() {
        return 1.0;
    }
    let k = kappa.abs();
    normal::central_mass(k) - 2.0 * k * normal::pdf(k) + 2.0 * k * k * normal::sf(k)
}

/// `B(psi_k, Phi) = P{|Z| <= k}`.
pub fn b_gauss(kappa: f64) -> f64 {
    normal::central_mass(kappa)
}

/// Worst case of `E psi_k^2` over the contamination neighbourhood:
/// `(1 - eps) A(psi_k, Phi) + eps k^2`.
pub fn a_bar(kappa: f64, epsilon: f64) -> f64 {
    if epsilon == 0.0 {
        return a_gauss(kappa);
    }
    (1.0 - epsilon) * a_gauss(kappa) + epsilon * kappa * kappa
}

/// Best case of `E psi_k'` over the neighbourhood: `(1 - eps)(2 Phi(k) - 1)`.
pub fn b_bar(kappa: f64, epsilon: f64) -> f64 {
    (1.0 - epsilon) * b_gauss(kappa)
}

/// Worst-case asymptotic variance `A_bar / B_bar^2`; `+inf` at the pole `k = 0`.
pub fn v_bar(kappa: f64, epsilon: f64) -> f64 {
    let b = b_bar(kappa, epsilon);
    if b == 0.0 {
        return f64::INFINITY;
    }
    a_bar(kappa, epsilon) / (b * b)
}

/// Fisher information of the Huber-shaped density with corner `kappa`:
/// `(1 - eps) int_{-k}^{k} x^2 phi + k^2 (eps + (1 - eps) 2 Phi(-k))`.
///
/// At Huber's minimax corner this equals the minimal Fisher information.
/// Algebraically it coincides with [`a_bar`].
pub fn j_info(kappa: f64, epsilon: f64) -> f64 {
    if kappa.is_infinite() {
        return if epsilon == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let k = kappa.abs();
    let inner = normal::central_mass(k) - 2.0 * k * normal::pdf(k);
    (1.0 - epsilon) * inner + k * k * (epsilon + (1.0 - epsilon) * 2.0 * normal::sf(k))
}

/// Stationarity of `v_bar` in `kappa`, written as Huber's equation
/// `2 (1 - eps) phi(k) - k (eps + 2 (1 - eps) Phi(-k)) = 0`. Positive to the
/// left of the minimizer, negative to the right.
pub fn huber_equation(kappa: f64, epsilon: f64) -> f64 {
    2.0 * (1.0 - epsilon) * normal::pdf(kappa)
        - kappa * (epsilon + 2.0 * (1.0 - epsilon) * normal::sf(kappa))
}

/// Huber's scalar-location minimax quantities at contamination `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalMinimax {
    pub epsilon: f64,
    /// Minimax capping parameter; `+inf` at `epsilon = 0`.
    pub kappa_star: f64,
    /// Minimal Fisher information over the neighbourhood.
    pub i_star: f64,
    /// Minimax asymptotic variance `1 / i_star`.
    pub v_star: f64,
}

const KAPPA_LO: f64 = 1e-4;
const KAPPA_HI: f64 = 10.0;
const KAPPA_LO_LIMIT: f64 = 1e-14;
const KAPPA_HI_LIMIT: f64 = 40.0;
const SCAN_POINTS: usize = 160;

/// Minimizes `v_bar(., eps)`: coarse log-scan (widening the bracket when the
/// minimum sits on an edge), a unimodality check, golden-section refinement
/// to `1e-8`, then a polish on Huber's stationarity equation.
pub fn classical_minimax(epsilon: f64) -> Result<ClassicalMinimax> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(invalid(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    if epsilon == 0.0 {
        return Ok(ClassicalMinimax { epsilon, kappa_star: f64::INFINITY, i_star: 1.0, v_star: 1.0 });
    }

    let (mut lo, mut hi) = (KAPPA_LO, KAPPA_HI);
    let (grid, idx) = loop {
        let grid = roots::logspace(lo, hi, SCAN_POINTS);
        let vals: Vec<f64> = grid.iter().map(|&k| v_bar(k, epsilon)).collect();
        let idx = argmin(&vals);
        if idx == 0 {
            if lo <= KAPPA_LO_LIMIT {
                return Err(Error::BracketExhausted(format!(
                    "minimizer of v_bar below {KAPPA_LO_LIMIT:e} at eps = {epsilon}"
                )));
            }
            lo = (lo * 1e-3).max(KAPPA_LO_LIMIT);
            continue;
        }
        if idx == SCAN_POINTS - 1 {
            if hi >= KAPPA_HI_LIMIT {
                return Err(Error::BracketExhausted(format!(
                    "minimizer of v_bar above {KAPPA_HI_LIMIT} at eps = {epsilon}"
                )));
            }
            hi = (hi * 2.0).min(KAPPA_HI_LIMIT);
            continue;
        }
        check_unimodal(&vals, idx, epsilon)?;
        break (grid, idx);
    };

    let (a, b) = (grid[idx - 1], grid[idx + 1]);
    let golden = roots::golden_section(|k| v_bar(k, epsilon), a, b, 1e-8 * grid[idx].max(1e-8));
    // Polish: the stationarity condition is a root with a sign change inside
    // the scan cell, so bisection pins kappa to machine precision.
    let kappa_star = roots::bisect(|k| huber_equation(k, epsilon), a, b, 1e-15).unwrap_or(golden);
    // Golden-section only resolves a flat minimum to ~sqrt(machine eps).
    if (kappa_star - golden).abs() > 1e-4 * kappa_star {
        return Err(Error::Numerical(format!(
            "golden-section minimizer {golden} disagrees with stationary point {kappa_star}"
        )));
    }

    let i_star = j_info(kappa_star, epsilon);
    let v_star = v_bar(kappa_star, epsilon);
    if (v_star * i_star - 1.0).abs() > 1e-6 {
        return Err(Error::Numerical(format!(
            "classical identity v* i* = 1 violated at eps = {epsilon}: {}",
            v_star * i_star
        )));
    }
    Ok(ClassicalMinimax { epsilon, kappa_star, i_star, v_star })
}

fn argmin(vals: &[f64]) -> usize {
    vals.iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) })
        .0
}

fn check_unimodal(vals: &[f64], idx: usize, epsilon: f64) -> Result<()> {
    // Allow round-off sized wiggles on the flat part near the minimum.
    let slack = 1e-12 * vals[idx].abs();
    let decreasing = vals[..=idx].windows(2).all(|w| w[1] <= w[0] + slack);
    let increasing = vals[idx..].windows(2).all(|w| w[1] >= w[0] - slack);
    if decreasing && increasing {
        Ok(())
    } else {
        Err(Error::Numerical(format!("v_bar(., {epsilon}) is not unimodal on the scan grid")))
    }
}

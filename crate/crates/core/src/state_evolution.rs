//! Population state evolution for contaminated-normal errors.
//!
//! With `W ~ F`, `Z ~ N(0,1)` independent and the effective score
//! `Psi(.; r)`, one step of the evolution is
//!
//! ```text
//! r   = smallest root of  E Psi'_lambda(W + tau Z; r) = 1/m
//! T(tau^2) = m E Psi_lambda(W + tau Z; r)^2
//! ```
//!
//! Both expectations are evaluated in closed form. Under the floating
//! tuning the threshold is re-set every step to `kappa * sqrt(sigma^2 + tau^2)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::noise::{Contamination, ContaminationModel};
use crate::normal;
use crate::roots;
use crate::scalar::{a_gauss, b_gauss};

/// How the Huber threshold is chosen along the evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum Tuning {
    /// Threshold fixed in response units; `+inf` is least squares.
    FixedLambda(f64),
    /// Threshold floats with the effective noise level: `lambda_t = kappa sigma_t`.
    FloatingKappa(f64),
}

impl Tuning {
    pub fn value(&self) -> f64 {
        match *self {
            Tuning::FixedLambda(v) | Tuning::FloatingKappa(v) => v,
        }
    }

    /// Threshold in response units at the current `tau^2`.
    pub fn threshold(&self, tau_sq: f64, noise: &ContaminationModel) -> f64 {
        match *self {
            Tuning::FixedLambda(l) => l,
            Tuning::FloatingKappa(k) => k * effective_sigma(tau_sq, noise),
        }
    }
}

/// `sqrt(sigma_base^2 + tau^2)`.
pub fn effective_sigma(tau_sq: f64, noise: &ContaminationModel) -> f64 {
    let s = noise.sigma_base();
    (s * s + tau_sq).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeConfig {
    /// Observations per parameter, `n/p -> m > 1`.
    pub m: f64,
    pub tuning: Tuning,
    pub noise: ContaminationModel,
    /// Initial condition `tau_0^2`.
    pub tau0_sq: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Iterates above this level that keep expanding declare divergence.
    pub ceiling: f64,
    pub expanding_steps: usize,
}

impl SeConfig {
    pub fn new(m: f64, tuning: Tuning, noise: ContaminationModel) -> Result<Self> {
        let cfg = Self {
            m,
            tuning,
            noise,
            tau0_sq: 0.0,
            tol: 1e-10,
            max_iter: 10_000,
            ceiling: 1e12,
            expanding_steps: 50,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn fixed_lambda(m: f64, lambda: f64, noise: ContaminationModel) -> Result<Self> {
        Self::new(m, Tuning::FixedLambda(lambda), noise)
    }

    pub fn floating_kappa(m: f64, kappa: f64, noise: ContaminationModel) -> Result<Self> {
        Self::new(m, Tuning::FloatingKappa(kappa), noise)
    }

    pub fn with_tau0_sq(mut self, tau0_sq: f64) -> Result<Self> {
        self.tau0_sq = tau0_sq;
        self.validate()?;
        Ok(self)
    }

    pub fn with_tol(mut self, tol: f64) -> Result<Self> {
        self.tol = tol;
        self.validate()?;
        Ok(self)
    }

    pub fn with_ceiling(mut self, ceiling: f64) -> Result<Self> {
        self.ceiling = ceiling;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 1.0 && self.m.is_finite()) {
            return Err(invalid(format!("m must exceed 1, got {}", self.m)));
        }
        let v = self.tuning.value();
        if !(v > 0.0) {
            return Err(invalid(format!("tuning parameter must be positive, got {v}")));
        }
        if v.is_infinite() && !self.noise.is_proper() {
            return Err(invalid("least squares has infinite variance under contamination at infinity"));
        }
        if !(self.tau0_sq >= 0.0 && self.tau0_sq.is_finite()) {
            return Err(invalid(format!("tau0^2 must be finite and nonnegative, got {}", self.tau0_sq)));
        }
        if !(self.tol > 0.0) {
            return Err(invalid(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter must be positive"));
        }
        if !(self.ceiling > 0.0) {
            return Err(invalid("divergence ceiling must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPointStatus {
    Converged,
    /// Iterates run off to infinity: no finite fixed point.
    Diverged,
}

/// One iterate of the evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeStep {
    pub tau_sq: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeFixedPoint {
    pub status: FixedPointStatus,
    /// `+inf` when diverged.
    pub tau_sq_inf: f64,
    pub r_inf: Option<f64>,
    /// Asymptotic variance `m tau^2_inf`.
    pub avar: f64,
    pub iterations: usize,
    pub trace: Vec<SeStep>,
}

impl SeFixedPoint {
    pub fn converged(&self) -> bool {
        self.status == FixedPointStatus::Converged
    }

    fn diverged(iterations: usize, trace: Vec<SeStep>) -> Self {
        Self {
            status: FixedPointStatus::Diverged,
            tau_sq_inf: f64::INFINITY,
            r_inf: None,
            avar: f64::INFINITY,
            iterations,
            trace,
        }
    }
}

/// `E Psi'_lambda(W + tau Z; r)`.
pub fn effective_slope(tau_sq: f64, r: f64, lambda: f64, noise: &ContaminationModel) -> f64 {
    let gain = r / (1.0 + r);
    let cap = lambda * (1.0 + r);
    let eps = noise.epsilon();
    let s = effective_sigma(tau_sq, noise);
    let gauss = if cap.is_infinite() { 1.0 } else { b_gauss(cap / s) };
    let contam = match noise.kind() {
        Contamination::None => 0.0,
        Contamination::AtInfinity => 0.0,
        Contamination::SymmetricTwoPoint { mu } | Contamination::PointMass { mu } => {
            atom_slope(mu, tau_sq.sqrt(), cap)
        }
    };
    gain * ((1.0 - eps) * gauss + eps * contam)
}

/// `E Psi_lambda(W + tau Z; r)^2`.
pub fn variance_map(tau_sq: f64, r: f64, lambda: f64, noise: &ContaminationModel) -> f64 {
    let gain = r / (1.0 + r);
    let cap = lambda * (1.0 + r);
    let eps = noise.epsilon();
    let s = effective_sigma(tau_sq, noise);
    let gauss = if cap.is_infinite() { s * s } else { s * s * a_gauss(cap / s) };
    let contam = match noise.kind() {
        Contamination::None => 0.0,
        Contamination::AtInfinity => cap * cap,
        Contamination::SymmetricTwoPoint { mu } | Contamination::PointMass { mu } => {
            atom_second_moment(mu, tau_sq.sqrt(), cap)
        }
    };
    gain * gain * ((1.0 - eps) * gauss + eps * contam)
}

/// `P{|mu + tau Z| <= c}`.
fn atom_slope(mu: f64, tau: f64, cap: f64) -> f64 {
    if cap.is_infinite() {
        return 1.0;
    }
    if tau == 0.0 {
        return if mu.abs() <= cap { 1.0 } else { 0.0 };
    }
    normal::interval_mass((-cap - mu) / tau, (cap - mu) / tau)
}

/// `E psi_c(mu + tau Z)^2`: truncated second moment plus `c^2` times the
/// mass outside the window.
fn atom_second_moment(mu: f64, tau: f64, cap: f64) -> f64 {
    if cap.is_infinite() {
        return mu * mu + tau * tau;
    }
    if tau == 0.0 {
        return mu.abs().min(cap).powi(2);
    }
    let inside = normal::truncated_second_moment(mu, tau, cap);
    let outside = 1.0 - normal::interval_mass((-cap - mu) / tau, (cap - mu) / tau);
    inside + cap * cap * outside.max(0.0)
}

/// Classical sandwich `E Psi^2 / (E Psi')^2` at `(tau^2, r)`. At a fixed
/// point this equals `m tau^2_inf`.
pub fn sandwich_variance(tau_sq: f64, r: f64, lambda: f64, noise: &ContaminationModel) -> f64 {
    let b = effective_slope(tau_sq, r, lambda, noise);
    variance_map(tau_sq, r, lambda, noise) / (b * b)
}

const R_SCAN_POINTS: usize = 64;
const R_CAP: f64 = 1e8;

/// Smallest `r > 0` with `effective_slope(tau^2, r, lambda, F) = 1/m`.
///
/// Since `effective_slope <= r/(1+r)`, the root is at least `1/(m-1)`. The
/// upper end doubles until the slope crosses `1/m`; the first crossing among
/// 64 log-spaced points in the bracket is then bisected to relative `1e-12`.
pub fn solve_r(tau_sq: f64, m: f64, lambda: f64, noise: &ContaminationModel) -> Result<f64> {
    if !(m > 1.0) {
        return Err(invalid(format!("m must exceed 1, got {m}")));
    }
    if !(lambda > 0.0) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    let target = 1.0 / m;
    let slope = |r: f64| effective_slope(tau_sq, r, lambda, noise) - target;

    let sup = if noise.is_proper() { 1.0 } else { 1.0 - noise.epsilon() };
    if sup <= target {
        return Err(Error::NoSolution(format!(
            "sup_r E Psi' = {sup} does not exceed 1/m = {target}"
        )));
    }

    let r_lo = 1.0 / (m - 1.0);
    if slope(r_lo) >= 0.0 {
        // Only possible with an identity score on proper noise.
        return Ok(r_lo);
    }
    // The cap has to reach the bulk of the effective noise, so scale the
    // search limit with sigma / lambda.
    let scale = if lambda.is_finite() { (effective_sigma(tau_sq, noise) / lambda).max(1.0) } else { 1.0 };
    let r_max = R_CAP * scale;
    let mut r_hi = (2.0 * r_lo).max(1.0);
    while slope(r_hi) < 0.0 {
        if r_hi >= r_max {
            return Err(Error::NoSolution(format!(
                "effective slope stays below 1/m = {target} up to r = {r_hi:e}"
            )));
        }
        r_hi = (r_hi * 2.0).min(r_max);
    }

    let grid = roots::logspace(r_lo, r_hi, R_SCAN_POINTS);
    let first = grid.iter().position(|&r| slope(r) >= 0.0).unwrap_or(R_SCAN_POINTS - 1);
    let (a, b) = (grid[first.saturating_sub(1)], grid[first]);
    if a == b {
        return Ok(a);
    }
    roots::bisect_relative(slope, a, b, 1e-12)
}

/// One evolution step: returns `(T(tau^2), r)`.
pub fn se_step(tau_sq: f64, cfg: &SeConfig) -> Result<(f64, f64)> {
    let lambda = cfg.tuning.threshold(tau_sq, &cfg.noise);
    let r = solve_r(tau_sq, cfg.m, lambda, &cfg.noise)?;
    Ok((cfg.m * variance_map(tau_sq, r, lambda, &cfg.noise), r))
}

/// The variance map `T(tau^2) = m A(tau^2, R(tau))`.
pub fn se_map(tau_sq: f64, cfg: &SeConfig) -> Result<f64> {
    se_step(tau_sq, cfg).map(|(t, _)| t)
}

/// Iterates `tau^2 <- T(tau^2)` from `tau_0^2`.
///
/// Picard iteration is the primary method. A converged iterate is polished
/// by bisection on `T(tau^2) - tau^2`. When Picard stalls (iteration budget,
/// oscillation) the fixed point is bracketed directly; if no bracket exists
/// below the ceiling the evolution is reported as diverged.
pub fn fixed_point(cfg: &SeConfig) -> Result<SeFixedPoint> {
    cfg.validate()?;
    let mut trace = Vec::new();
    let mut tau_sq = cfg.tau0_sq;
    let mut expanding = 0usize;
    let mut sign_flips = 0usize;
    let mut last_delta = 0.0f64;

    for it in 1..=cfg.max_iter {
        let (next, r) = se_step(tau_sq, cfg)?;
        trace.push(SeStep { tau_sq, r });
        if !next.is_finite() {
            return Ok(SeFixedPoint::diverged(it, trace));
        }
        let delta = next - tau_sq;
        if delta.abs() <= cfg.tol * (1.0 + next) {
            let polished = polish(cfg, next).unwrap_or(next);
            return finish(cfg, polished, it, trace);
        }
        expanding = if delta > 0.0 { expanding + 1 } else { 0 };
        if next > cfg.ceiling && expanding >= cfg.expanding_steps {
            return Ok(SeFixedPoint::diverged(it, trace));
        }
        if delta * last_delta < 0.0 {
            sign_flips += 1;
            if sign_flips > 20 {
                break;
            }
        }
        last_delta = delta;
        tau_sq = next;
    }

    let iterations = trace.len();
    match bracket_fixed_point(cfg, tau_sq)? {
        Some(root) => finish(cfg, root, iterations, trace),
        None => Ok(SeFixedPoint::diverged(iterations, trace)),
    }
}

fn gap(cfg: &SeConfig, tau_sq: f64) -> Result<f64> {
    Ok(se_map(tau_sq, cfg)? - tau_sq)
}

fn finish(cfg: &SeConfig, tau_sq: f64, iterations: usize, trace: Vec<SeStep>) -> Result<SeFixedPoint> {
    let lambda = cfg.tuning.threshold(tau_sq, &cfg.noise);
    let r = solve_r(tau_sq, cfg.m, lambda, &cfg.noise)?;
    Ok(SeFixedPoint {
        status: FixedPointStatus::Converged,
        tau_sq_inf: tau_sq,
        r_inf: Some(r),
        avar: cfg.m * tau_sq,
        iterations,
        trace,
    })
}

/// Brackets the crossing of `T` with the identity around `x` and bisects.
fn polish(cfg: &SeConfig, x: f64) -> Option<f64> {
    let mut delta = (10.0 * cfg.tol * (1.0 + x)).max(1e-13 * (1.0 + x));
    for _ in 0..40 {
        let lo = (x - delta).max(0.0);
        let hi = x + delta;
        let (glo, ghi) = (gap(cfg, lo).ok()?, gap(cfg, hi).ok()?);
        if glo >= 0.0 && ghi <= 0.0 {
            return roots::bisect(|t| gap(cfg, t).unwrap_or(f64::NAN), lo, hi, 1e-15).ok();
        }
        delta *= 4.0;
    }
    None
}

/// `T(0) > 0`, so a fixed point exists iff `T(t) < t` somewhere. Searches
/// upward geometrically from the last iterate up to the ceiling.
fn bracket_fixed_point(cfg: &SeConfig, start: f64) -> Result<Option<f64>> {
    let mut lo = 0.0;
    let mut hi = start.max(1.0);
    // Walk down first in case the last iterate overshot.
    while gap(cfg, hi)? < 0.0 {
        let lower = hi / 4.0;
        if lower < 1e-12 {
            break;
        }
        if gap(cfg, lower)? >= 0.0 {
            lo = lower;
            break;
        }
        hi = lower;
    }
    loop {
        let g = gap(cfg, hi)?;
        if g <= 0.0 {
            break;
        }
        lo = hi;
        if hi > cfg.ceiling {
            return Ok(None);
        }
        hi *= 4.0;
    }
    let root = roots::bisect(|t| gap(cfg, t).unwrap_or(f64::NAN), lo, hi, 1e-15)?;
    Ok(Some(root))
}

/// `lambda_inf(m, kappa, F) = kappa sqrt(sigma^2 + tau^2_inf)` of the
/// floating evolution.
pub fn calibrate_lambda_from_kappa(m: f64, kappa: f64, noise: &ContaminationModel) -> Result<f64> {
    let fp = fixed_point(&SeConfig::floating_kappa(m, kappa, *noise)?)?;
    if !fp.converged() {
        return Err(Error::NoSolution(format!(
            "floating evolution diverges at kappa = {kappa}, m = {m}"
        )));
    }
    Ok(kappa * effective_sigma(fp.tau_sq_inf, noise))
}

/// Inverse of [`calibrate_lambda_from_kappa`]: root-finds `kappa`.
///
/// Since `lambda_inf(kappa) >= kappa sigma_base`, the root lies below
/// `lambda / sigma_base`; diverging evolutions count as overshooting.
pub fn calibrate_kappa_from_lambda(m: f64, lambda: f64, noise: &ContaminationModel) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda must be positive and finite, got {lambda}")));
    }
    let excess = |kappa: f64| match calibrate_lambda_from_kappa(m, kappa, noise) {
        Ok(l) => l - lambda,
        Err(Error::NoSolution(_)) => f64::INFINITY,
        Err(_) => f64::NAN,
    };
    let hi = lambda / noise.sigma_base();
    let mut lo = hi / 2.0;
    loop {
        let e = excess(lo);
        if e.is_nan() {
            return Err(Error::Numerical(format!("calibration failed at kappa = {lo}")));
        }
        if e < 0.0 {
            break;
        }
        lo /= 2.0;
        if lo < 1e-10 * hi {
            return Err(Error::NoSolution(format!(
                "no kappa reproduces lambda = {lambda} at m = {m}"
            )));
        }
    }
    roots::bisect_relative(excess, lo, hi, 1e-12)
}

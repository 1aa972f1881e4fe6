//! Least-favorable state evolution and the proportional-regime minimax problem.
//!
//! Under the improper law with its contamination at infinity and a floating
//! threshold `kappa`, the evolution is affine in `tau^2`:
//! `T(tau^2) = (1 + tau^2) V(kbb) / m` with `kbb = kappa (1 + rbb)` and `rbb`
//! the unique root of `(r/(1+r)) B(kappa (1+r)) = 1/m`. Everything here is
//! closed form up to one-dimensional root finding.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::normal;
use crate::roots;
use crate::scalar::{b_bar, classical_minimax, v_bar, ClassicalMinimax};

fn check_m_eps(m: f64, epsilon: f64) -> Result<()> {
    if !(m > 1.0) {
        return Err(invalid(format!("m must exceed 1, got {m}")));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(invalid(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LfseParams {
    pub m: f64,
    pub epsilon: f64,
    pub kappa: f64,
}

impl LfseParams {
    pub fn new(m: f64, epsilon: f64, kappa: f64) -> Result<Self> {
        check_m_eps(m, epsilon)?;
        if !(kappa > 0.0) {
            return Err(invalid(format!("kappa must be positive, got {kappa}")));
        }
        Ok(Self { m, epsilon, kappa })
    }
}

/// Root `rbb > 0` of `(r/(1+r)) B(kappa (1+r), eps) = 1/m`.
///
/// The left side increases from 0 to `1 - eps`, so a root exists iff
/// `(1 - eps) > 1/m`; it is at least the `kappa -> inf` value
/// `1/(m(1-eps) - 1)`.
pub fn solve_rbarbar(m: f64, epsilon: f64, kappa: f64) -> Result<f64> {
    LfseParams::new(m, epsilon, kappa)?;
    let sup = 1.0 - epsilon;
    if sup <= 1.0 / m {
        return Err(Error::NoSolution(format!(
            "1 - eps = {sup} does not exceed 1/m = {}",
            1.0 / m
        )));
    }
    let lhs = |r: f64| r / (1.0 + r) * b_bar(kappa * (1.0 + r), epsilon) - 1.0 / m;
    let lo = 1.0 / (m * sup - 1.0);
    if kappa.is_infinite() {
        return Ok(lo);
    }
    let mut hi = 2.0 * lo;
    let mut iters = 0;
    while lhs(hi) < 0.0 {
        hi *= 2.0;
        iters += 1;
        if iters > 2000 || !hi.is_finite() {
            return Err(Error::NoSolution(format!("no bracket for rbb at kappa = {kappa}")));
        }
    }
    // The solver relies on monotonicity; check it on the bracket.
    let grid = roots::logspace(lo, hi, 64);
    let vals: Vec<f64> = grid.iter().map(|&r| lhs(r)).collect();
    if vals.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Numerical(format!(
            "LFSE slope not increasing on [{lo:e}, {hi:e}] at kappa = {kappa}"
        )));
    }
    // B_bar saturates at 1 - eps for large kappa, putting the root on lo.
    if lhs(lo) >= 0.0 {
        return Ok(lo);
    }
    roots::bisect_relative(lhs, lo, hi, 1e-13)
}

/// `kbb = kappa (1 + rbb)`.
pub fn effective_kappa(p: &LfseParams) -> Result<f64> {
    Ok(p.kappa * (1.0 + solve_rbarbar(p.m, p.epsilon, p.kappa)?))
}

/// The affine LFSE map `(1 + tau^2) V(kbb) / m`.
pub fn lfse_t(tau_sq: f64, p: &LfseParams) -> Result<f64> {
    let kbb = effective_kappa(p)?;
    Ok((1.0 + tau_sq) * v_bar(kbb, p.epsilon) / p.m)
}

/// Fixed point `x = (1 + x) s` of an affine map with slope `s`; infinite
/// when `s >= 1`.
pub fn affine_fixed_point(slope: f64) -> f64 {
    if slope >= 1.0 {
        f64::INFINITY
    } else {
        slope / (1.0 - slope)
    }
}

/// `tau^2_inf` of the LFSE, `+inf` when `V(kbb) >= m`.
pub fn lfse_fixed_point(p: &LfseParams) -> Result<f64> {
    let kbb = effective_kappa(p)?;
    Ok(affine_fixed_point(v_bar(kbb, p.epsilon) / p.m))
}

/// Worst-case asymptotic variance `m tau^2_inf` at `kappa`.
pub fn lfse_avar(p: &LfseParams) -> Result<f64> {
    Ok(p.m * lfse_fixed_point(p)?)
}

/// `rbb` as a function of `kbb`: `1/(m(1-eps)(2 Phi(kbb) - 1) - 1)`.
pub fn rbarbar_of_kbb(kbb: f64, m: f64, epsilon: f64) -> Result<f64> {
    check_m_eps(m, epsilon)?;
    if !(kbb > 0.0) {
        return Err(invalid(format!("kbb must be positive, got {kbb}")));
    }
    let denom = m * b_bar(kbb, epsilon) - 1.0;
    if !(denom > 0.0) {
        return Err(Error::DomainError(format!(
            "m (1-eps)(2 Phi(kbb) - 1) = {} <= 1 at kbb = {kbb}",
            denom + 1.0
        )));
    }
    Ok(1.0 / denom)
}

/// The floating threshold that produces a given effective `kbb`:
/// `kbb / (1 + rbb(kbb))`.
pub fn kappa_underline(kbb: f64, m: f64, epsilon: f64) -> Result<f64> {
    if kbb.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok(kbb / (1.0 + rbarbar_of_kbb(kbb, m, epsilon)?))
}

/// `lambda_bar(kappa) = kappa / sqrt(1 - V(kbb)/m)`, the fixed threshold
/// calibrated to `kappa` under the least-favorable law.
pub fn worst_case_lambda(m: f64, epsilon: f64, kappa: f64) -> Result<f64> {
    let p = LfseParams::new(m, epsilon, kappa)?;
    let slope = v_bar(effective_kappa(&p)?, epsilon) / m;
    if slope >= 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(kappa / (1.0 - slope).sqrt())
}

/// The minimax-tuned Huber estimator in the proportional regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimaxSolution {
    pub epsilon: f64,
    pub m: f64,
    /// Floating threshold; `None` in the breakdown phase.
    pub kappa_underline_star: Option<f64>,
    /// Fixed threshold in response units; `None` in the breakdown phase.
    pub lambda_star: Option<f64>,
    /// Minimax asymptotic variance, `+inf` at breakdown.
    pub v_star: f64,
    pub breakdown: bool,
    pub classical: ClassicalMinimax,
}

/// Solves the minimax problem at `(m, eps)`.
///
/// `V* = 1/(i* - 1/m)` when `m i* > 1`; the optimal effective threshold is
/// Huber's classical `kappa*`, mapped back to a floating threshold and then
/// calibrated to response units.
pub fn minimax(m: f64, epsilon: f64) -> Result<MinimaxSolution> {
    check_m_eps(m, epsilon)?;
    minimax_from_classical(m, &classical_minimax(epsilon)?)
}

/// Breakdown point: the `eps` solving `m i*(eps) = 1`.
pub fn breakdown_epsilon(m: f64) -> Result<f64> {
    if !(m > 1.0 && m.is_finite()) {
        return Err(invalid(format!("m must be finite and exceed 1, got {m}")));
    }
    let f = |eps: f64| match classical_minimax(eps) {
        Ok(c) => m * c.i_star - 1.0,
        Err(_) => f64::NAN,
    };
    let mut hi = 0.5;
    while f(hi) > 0.0 {
        hi = 1.0 - (1.0 - hi) / 4.0;
        if 1.0 - hi < 1e-12 {
            return Err(Error::NoSolution(format!("breakdown point indistinguishable from 1 at m = {m}")));
        }
    }
    roots::bisect(f, 0.0, hi, 1e-12)
}

/// Classical efficiency loss factor `K` with `V* = K v* / (1 - 1/m)`.
pub fn suboptimality_ratio(m: f64, epsilon: f64) -> Result<f64> {
    let sol = minimax(m, epsilon)?;
    if sol.breakdown {
        return Err(Error::DomainError(format!(
            "(m, eps) = ({m}, {epsilon}) lies in the breakdown phase"
        )));
    }
    Ok((1.0 - 1.0 / m) / (1.0 - sol.classical.v_star / m))
}

/// Right end `kappa+` of the interval on which the worst-case variance is
/// finite: `V(kbb) = m` with `kbb > kappa*`, mapped back through
/// [`kappa_underline`]. Infinite without contamination.
pub fn kappa_upper(m: f64, epsilon: f64) -> Result<f64> {
    check_m_eps(m, epsilon)?;
    let c = classical_minimax(epsilon)?;
    if c.kappa_star.is_infinite() {
        return Ok(f64::INFINITY);
    }
    if m * c.i_star <= 1.0 {
        return Err(Error::DomainError(format!(
            "(m, eps) = ({m}, {epsilon}) lies in the breakdown phase"
        )));
    }
    let g = |k: f64| v_bar(k, epsilon) - m;
    let lo = c.kappa_star;
    let mut hi = 2.0 * lo.max(1.0);
    while g(hi) < 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NoSolution("worst-case variance never reaches m".into()));
        }
    }
    let kbb = roots::bisect(g, lo, hi, 1e-14)?;
    kappa_underline(kbb, m, epsilon)
}

/// Which minimax quantity a [`PhaseGrid`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseQuantity {
    VStar,
    KappaStar,
    LambdaStar,
}

impl PhaseQuantity {
    fn extract(&self, sol: &MinimaxSolution) -> f64 {
        match self {
            PhaseQuantity::VStar => sol.v_star,
            PhaseQuantity::KappaStar => sol.kappa_underline_star.unwrap_or(f64::NAN),
            PhaseQuantity::LambdaStar => sol.lambda_star.unwrap_or(f64::NAN),
        }
    }
}

/// A minimax quantity over `(eps, 1/m)`. Cells in the breakdown phase hold
/// `+inf` for `V*` and `NaN` (undefined) for the tunings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub quantity: PhaseQuantity,
    pub epsilon_grid: Vec<f64>,
    pub inv_m_grid: Vec<f64>,
    /// `values[i][j]` at `(inv_m_grid[i], epsilon_grid[j])`.
    pub values: Vec<Vec<f64>>,
    /// Samples `(eps, i*(eps))` of the critical curve `1/m = i*(eps)`.
    pub critical_curve: Vec<(f64, f64)>,
}

pub const CRITICAL_CURVE_POINTS: usize = 512;

/// `n` points `(eps, i*(eps))` on the critical curve, `eps` uniform on
/// `[lo, hi]`. The curve is explicit in `eps`, so no refinement is needed.
pub fn critical_curve(lo: f64, hi: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    if !(0.0 <= lo && lo < hi && hi < 1.0) || n < 2 {
        return Err(invalid(format!("bad critical curve range [{lo}, {hi}] x {n}")));
    }
    (0..n)
        .into_par_iter()
        .map(|k| {
            let eps = lo + (hi - lo) * k as f64 / (n - 1) as f64;
            classical_minimax(eps).map(|c| (eps, c.i_star))
        })
        .collect()
}

pub fn phase_grid(quantity: PhaseQuantity, epsilon_grid: &[f64], inv_m_grid: &[f64]) -> Result<PhaseGrid> {
    if epsilon_grid.is_empty() || inv_m_grid.is_empty() {
        return Err(invalid("phase grid axes must be nonempty"));
    }
    for &x in epsilon_grid.iter().chain(inv_m_grid) {
        if !(x > 0.0 && x < 1.0) {
            return Err(invalid(format!("grid values must lie in (0, 1), got {x}")));
        }
    }
    // One classical solve per column; every cell is then closed form.
    let columns: Vec<ClassicalMinimax> = epsilon_grid
        .par_iter()
        .map(|&eps| classical_minimax(eps))
        .collect::<Result<_>>()?;
    let values = inv_m_grid
        .par_iter()
        .map(|&inv_m| {
            columns
                .iter()
                .map(|c| minimax_from_classical(1.0 / inv_m, c).map(|s| quantity.extract(&s)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let lo = epsilon_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = epsilon_grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let critical_curve = if hi > lo {
        critical_curve(lo, hi, CRITICAL_CURVE_POINTS)?
    } else {
        vec![(lo, columns[0].i_star)]
    };
    Ok(PhaseGrid {
        quantity,
        epsilon_grid: epsilon_grid.to_vec(),
        inv_m_grid: inv_m_grid.to_vec(),
        values,
        critical_curve,
    })
}

/// [`minimax`] reusing an already solved classical problem.
pub fn minimax_from_classical(m: f64, c: &ClassicalMinimax) -> Result<MinimaxSolution> {
    check_m_eps(m, c.epsilon)?;
    if m * c.i_star <= 1.0 {
        return Ok(MinimaxSolution {
            epsilon: c.epsilon,
            m,
            kappa_underline_star: None,
            lambda_star: None,
            v_star: f64::INFINITY,
            breakdown: true,
            classical: *c,
        });
    }
    let (ku, lambda) = if c.kappa_star.is_infinite() {
        (f64::INFINITY, f64::INFINITY)
    } else {
        let ku = kappa_underline(c.kappa_star, m, c.epsilon)?;
        (ku, ku / (1.0 - c.v_star / m).sqrt())
    };
    Ok(MinimaxSolution {
        epsilon: c.epsilon,
        m,
        kappa_underline_star: Some(ku),
        lambda_star: Some(lambda),
        v_star: 1.0 / (c.i_star - 1.0 / m),
        breakdown: false,
        classical: *c,
    })
}

/// `lambda_bar` sampled on `(0, kappa+)` with a strict-increase verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaCurve {
    pub m: f64,
    pub epsilon: f64,
    pub kappa_upper: f64,
    pub kappa: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Every finite difference is positive.
    pub increasing: bool,
}

/// Samples `kappa = kappa+ u` on `n` interior points `u` of `(0, 1)`.
pub fn lambda_curve(m: f64, epsilon: f64, n: usize) -> Result<LambdaCurve> {
    if n < 2 {
        return Err(invalid("need at least two samples"));
    }
    let kappa_upper = kappa_upper(m, epsilon)?;
    if !kappa_upper.is_finite() {
        return Err(Error::DomainError("kappa+ is infinite without contamination".into()));
    }
    let kappa: Vec<f64> = (1..=n).map(|k| kappa_upper * k as f64 / (n + 1) as f64).collect();
    let lambda = kappa
        .iter()
        .map(|&k| worst_case_lambda(m, epsilon, k))
        .collect::<Result<Vec<_>>>()?;
    let increasing = lambda.windows(2).all(|w| w[1] > w[0]);
    Ok(LambdaCurve { m, epsilon, kappa_upper, kappa, lambda, increasing })
}

/// `2 Phi(k) - 1` weighted by `1 - eps`, exposed for the inverse map check.
pub fn central_slope(kbb: f64, epsilon: f64) -> f64 {
    (1.0 - epsilon) * normal::central_mass(kbb)
}

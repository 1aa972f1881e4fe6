//! Reproduction helpers shared by the command-line front end and the tests:
//! the variance table, the Monte Carlo table, variance-map curves and
//! `lambda_bar` monotonicity curves.

use serde::{Deserialize, Serialize};

use crate::amp::{monte_carlo_with, McConfig, McSummary};
use crate::error::{invalid, Result};
use crate::lfse::{lambda_curve, lfse_fixed_point, lfse_t, minimax, LambdaCurve, LfseParams};
use crate::noise::ContaminationModel;
use crate::state_evolution::{fixed_point, se_map, SeConfig};

pub const TABLE1_EPSILONS: [f64; 7] = [0.05, 0.10, 0.15, 0.175, 0.1875, 0.20, 0.25];

/// `(eps, mu)` rows of the Monte Carlo table at `n = 500`, `p = 250`.
pub const TABLE2_ROWS: [(f64, f64); 10] = [
    (0.05, 2.0),
    (0.05, 5.0),
    (0.05, 10.0),
    (0.05, 20.0),
    (0.05, 100.0),
    (0.1875, 2.0),
    (0.1875, 5.0),
    (0.1875, 10.0),
    (0.1875, 20.0),
    (0.1875, 100.0),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub epsilon: f64,
    pub m: f64,
    /// `+inf` past breakdown.
    pub v_star: f64,
}

pub fn table1(m: f64, epsilons: &[f64]) -> Result<Vec<Table1Row>> {
    epsilons
        .iter()
        .map(|&eps| minimax(m, eps).map(|s| Table1Row { epsilon: eps, m, v_star: s.v_star }))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub epsilon: f64,
    pub mu: f64,
    pub lambda: f64,
    pub se_estimate: f64,
    pub se_estimate_std_error: f64,
    /// `sqrt(avar)` predicted by state evolution at the same `(m, lambda, F)`.
    pub se_predicted: f64,
    pub failures: usize,
    #[serde(skip)]
    pub summary: Option<McSummary>,
}

/// One Monte Carlo row at `lambda = lambda*(eps, n/p)`.
pub fn table2_row(epsilon: f64, mu: f64, n: usize, p: usize, reps: usize, seed: u64) -> Result<Table2Row> {
    if p == 0 || n <= p {
        return Err(invalid(format!("need n > p >= 1, got n = {n}, p = {p}")));
    }
    let m = n as f64 / p as f64;
    let sol = minimax(m, epsilon)?;
    let lambda = sol
        .lambda_star
        .ok_or_else(|| invalid(format!("(m, eps) = ({m}, {epsilon}) is past breakdown: no minimax tuning")))?;
    let noise = ContaminationModel::symmetric(epsilon, mu)?;
    let s = monte_carlo_with(&McConfig::new(n, p, noise, lambda, reps, seed))?;
    let predicted = if lambda.is_finite() {
        fixed_point(&SeConfig::fixed_lambda(m, lambda, noise)?)?.avar.sqrt()
    } else {
        (m / (m - 1.0)).sqrt()
    };
    Ok(Table2Row {
        epsilon,
        mu,
        lambda,
        se_estimate: s.se_estimate,
        se_estimate_std_error: s.se_estimate_std_error,
        se_predicted: predicted,
        failures: s.failures,
        summary: Some(s),
    })
}

pub fn table2(reps: usize, seed: u64) -> Result<Vec<Table2Row>> {
    TABLE2_ROWS.iter().map(|&(eps, mu)| table2_row(eps, mu, 500, 250, reps, seed)).collect()
}

/// Variance maps `T(tau^2)` of floating-threshold evolutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeMaps {
    pub m: f64,
    pub epsilon: f64,
    pub kappa: f64,
    pub tau_sq: Vec<f64>,
    /// One curve per contamination amplitude.
    pub proper: Vec<ProperMap>,
    pub lfse: Vec<f64>,
    /// `+inf` when the LFSE line has slope `>= 1`.
    pub lfse_fixed_point: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProperMap {
    pub mu: f64,
    pub t: Vec<f64>,
    /// `+inf` if the evolution diverges.
    pub fixed_point: f64,
}

/// Default threshold for [`semaps`]: the minimax `kappa_underline*` in the
/// bounded phase, 1 otherwise.
pub fn default_semaps_kappa(m: f64, epsilon: f64) -> Result<f64> {
    Ok(match minimax(m, epsilon)?.kappa_underline_star {
        Some(k) if k.is_finite() => k,
        _ => 1.0,
    })
}

/// Samples the proper maps for each `mu` and the LFSE line on `points`
/// equispaced `tau^2` in `[0, tau_sq_max]`.
pub fn semaps(m: f64, epsilon: f64, mus: &[f64], kappa: f64, tau_sq_max: f64, points: usize) -> Result<SeMaps> {
    if points < 2 || !(tau_sq_max > 0.0 && tau_sq_max.is_finite()) {
        return Err(invalid("need at least two points on a positive, finite tau^2 range"));
    }
    let tau_sq: Vec<f64> = (0..points).map(|i| tau_sq_max * i as f64 / (points - 1) as f64).collect();
    let params = LfseParams::new(m, epsilon, kappa)?;
    let lfse = tau_sq.iter().map(|&t| lfse_t(t, &params)).collect::<Result<Vec<_>>>()?;
    let proper = mus
        .iter()
        .map(|&mu| {
            let cfg = SeConfig::floating_kappa(m, kappa, ContaminationModel::symmetric(epsilon, mu)?)?;
            let t = tau_sq.iter().map(|&x| se_map(x, &cfg)).collect::<Result<Vec<_>>>()?;
            Ok(ProperMap { mu, t, fixed_point: fixed_point(&cfg)?.tau_sq_inf })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SeMaps { m, epsilon, kappa, tau_sq, proper, lfse, lfse_fixed_point: lfse_fixed_point(&params)? })
}

/// `lambda_bar` curve or the reason it is undefined at `(m, eps)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaMonoEntry {
    pub m: f64,
    pub epsilon: f64,
    pub curve: Option<LambdaCurve>,
    pub note: Option<String>,
}

pub fn lambda_mono(ms: &[f64], epsilons: &[f64], points: usize) -> Vec<LambdaMonoEntry> {
    let mut out = Vec::with_capacity(ms.len() * epsilons.len());
    for &m in ms {
        for &eps in epsilons {
            let (curve, note) = match lambda_curve(m, eps, points) {
                Ok(c) => (Some(c), None),
                Err(e) => (None, Some(e.to_string())),
            };
            out.push(LambdaMonoEntry { m, epsilon: eps, curve, note });
        }
    }
    out
}

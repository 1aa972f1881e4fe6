//! Monte Carlo estimates of the per-coordinate MSE of the Huber estimator.
//!
//! Rep `k` draws its dataset from ChaCha stream `k` under the run seed, so
//! results do not depend on scheduling. Reps run on the rayon pool; each
//! solve is single-threaded.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{gen_dataset_with, DatasetSpec, Placement};
use super::interior_point::interior_point_fit;
use super::irls::irls_fit_detailed;
use super::iteration::amp_fit;
use crate::error::{invalid, Error, Result};
use crate::noise::ContaminationModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Primal-dual interior point; reweighting can need thousands of
    /// iterations near the breakdown boundary.
    #[default]
    InteriorPoint,
    Irls,
    Amp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n: usize,
    pub p: usize,
    pub noise: ContaminationModel,
    pub lambda: f64,
    pub reps: usize,
    pub seed: u64,
    pub solver: Solver,
    pub placement: Placement,
    pub max_iter: usize,
    pub tol: f64,
}

pub const DEFAULT_REPS: usize = 200;

impl McConfig {
    pub fn new(n: usize, p: usize, noise: ContaminationModel, lambda: f64, reps: usize, seed: u64) -> Self {
        Self {
            n,
            p,
            noise,
            lambda,
            reps,
            seed,
            solver: Solver::default(),
            placement: Placement::default(),
            max_iter: 5000,
            tol: 1e-9,
        }
    }

    pub fn solver(mut self, solver: Solver) -> Self {
        self.solver = solver;
        self
    }

    pub fn placement(mut self, placement: Placement) -> Self {
        self.placement = placement;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub reps: usize,
    /// Reps whose solver errored or did not converge; excluded below.
    pub failures: usize,
    /// Mean over reps of `|theta_hat - theta0|^2 / p`.
    pub per_coordinate_mse: f64,
    /// `sqrt(per_coordinate_mse)`.
    pub se_estimate: f64,
    /// Standard error of `per_coordinate_mse`.
    pub mc_std_error: f64,
    /// Standard error of `se_estimate` by the delta method.
    pub se_estimate_std_error: f64,
    pub per_rep_mse: Vec<f64>,
}

fn one_rep(cfg: &McConfig, rep: usize) -> Result<f64> {
    let spec = DatasetSpec::new(cfg.n, cfg.p, cfg.noise, cfg.seed).stream(rep as u64).placement(cfg.placement);
    let data = gen_dataset_with(&spec)?;
    let theta = match cfg.solver {
        Solver::InteriorPoint if cfg.lambda.is_finite() => {
            let fit = interior_point_fit(&data, cfg.lambda, 500, 1e-12)?;
            if !fit.converged {
                return Err(Error::Numerical(format!("interior point did not converge in rep {rep}")));
            }
            fit.theta
        }
        // Least squares: one reweighting step is exact.
        Solver::InteriorPoint | Solver::Irls => {
            let fit = irls_fit_detailed(&data, cfg.lambda, cfg.max_iter, cfg.tol)?;
            if !fit.converged {
                return Err(Error::Numerical(format!("IRLS did not converge in rep {rep}")));
            }
            fit.theta
        }
        Solver::Amp => {
            let s = amp_fit(&data, cfg.lambda, cfg.max_iter, cfg.tol)?;
            if !s.converged {
                return Err(Error::Numerical(format!("AMP did not converge in rep {rep}")));
            }
            s.theta
        }
    };
    Ok((theta - &data.theta0).norm_squared() / cfg.p as f64)
}

pub fn monte_carlo_with(cfg: &McConfig) -> Result<McSummary> {
    if cfg.reps == 0 {
        return Err(invalid("reps must be at least 1"));
    }
    if !(cfg.lambda > 0.0) {
        return Err(invalid(format!("lambda must be positive, got {}", cfg.lambda)));
    }
    if !(cfg.n > cfg.p && cfg.p >= 1) {
        return Err(invalid(format!("need n > p >= 1, got n = {}, p = {}", cfg.n, cfg.p)));
    }
    let outcomes: Vec<Result<f64>> = (0..cfg.reps).into_par_iter().map(|k| one_rep(cfg, k)).collect();
    let mut per_rep = Vec::with_capacity(cfg.reps);
    let mut failures = 0;
    for o in outcomes {
        match o {
            Ok(v) => per_rep.push(v),
            Err(Error::InvalidParameter(msg)) => return Err(Error::InvalidParameter(msg)),
            Err(_) => failures += 1,
        }
    }
    if per_rep.is_empty() {
        return Err(Error::Numerical(format!("all {} reps failed", cfg.reps)));
    }
    let k = per_rep.len() as f64;
    let mean = per_rep.iter().sum::<f64>() / k;
    let var = if per_rep.len() > 1 {
        per_rep.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    let mc_std_error = (var / k).sqrt();
    let se = mean.sqrt();
    Ok(McSummary {
        reps: cfg.reps,
        failures,
        per_coordinate_mse: mean,
        se_estimate: se,
        mc_std_error,
        se_estimate_std_error: if se > 0.0 { mc_std_error / (2.0 * se) } else { 0.0 },
        per_rep_mse: per_rep,
    })
}

/// Interior-point solver, Bernoulli placement, default tolerances.
pub fn monte_carlo(
    n: usize,
    p: usize,
    noise: ContaminationModel,
    lambda: f64,
    reps: usize,
    seed: u64,
) -> Result<McSummary> {
    monte_carlo_with(&McConfig::new(n, p, noise, lambda, reps, seed))
}

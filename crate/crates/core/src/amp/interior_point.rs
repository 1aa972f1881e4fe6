//! Primal-dual interior-point solver for Huber regression.
//!
//! The problem is written as the quadratic program
//!
//! ```text
//! min  |u|^2/2 + lambda 1'(s + t)   s.t.  X theta + u + s - t = y,  s, t >= 0
//! ```
//!
//! whose multiplier `alpha` equals `u` and lives in the box `|alpha| <= lambda`
//! (`alpha = psi(y - X theta)` at the optimum). Each iteration solves one
//! `p x p` system `X' D^{-1} X`, as an IRLS step does, but the iteration count
//! does not degrade when residuals pile up on the kinks `|res| = lambda`,
//! which is where reweighting crawls.

use nalgebra::DVector;

use super::dataset::Dataset;
use super::irls::objective;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct InteriorPointFit {
    pub theta: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Final average complementarity.
    pub mu: f64,
    pub objective: f64,
}

/// Largest step in `(0, 1]` keeping `v + a dv >= 0`.
fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, &d)| d < 0.0)
        .map(|(&x, &d)| -x / d)
        .fold(1.0, f64::min)
}

pub fn interior_point_fit(data: &Dataset, lambda: f64, max_iter: usize, tol: f64) -> Result<InteriorPointFit> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda must be positive and finite, got {lambda}")));
    }
    let (n, p) = (data.n(), data.p());
    if n <= p {
        return Err(invalid(format!("need n > p, got n = {n}, p = {p}")));
    }
    let x = &data.x;
    let y = &data.y;

    let gram = x.tr_mul(x).cholesky().ok_or(Error::SingularSystem { iteration: 0 })?;
    let mut theta = gram.solve(&x.tr_mul(y));
    let res = y - x * &theta;
    // Dual slacks lambda -+ alpha are carried directly; recomputing them from
    // alpha cancels once alpha nears +-lambda.
    let mut zs = DVector::from_element(n, lambda);
    let mut zt = DVector::from_element(n, lambda);
    let mut s = res.map(|r| r.max(0.0) + lambda);
    let mut t = res.map(|r| (-r).max(0.0) + lambda);
    let scale = 1.0 + y.norm();

    let mut mu = f64::INFINITY;
    for it in 0..max_iter {
        let alpha = (&zt - &zs) * 0.5;
        let rp = x * &theta + &alpha + &s - &t - y;
        let rd = x.tr_mul(&alpha);
        mu = (s.dot(&zs) + t.dot(&zt)) / (2 * n) as f64;
        if rp.norm() <= tol * scale && rd.norm() <= tol * scale && mu <= tol * lambda * lambda {
            return Ok(finish(data, lambda, theta, it, true, mu));
        }

        let d_inv = DVector::from_fn(n, |i, _| 1.0 / (1.0 + s[i] / zs[i] + t[i] / zt[i]));
        let mut xd = x.clone();
        for (mut row, &w) in xd.row_iter_mut().zip(d_inv.iter()) {
            row *= w.sqrt();
        }
        let chol = xd.tr_mul(&xd).cholesky().ok_or(Error::SingularSystem { iteration: it })?;

        // Solves the Newton system for complementarity targets rhs_s, rhs_t.
        let solve = |rhs_s: &DVector<f64>, rhs_t: &DVector<f64>| {
            let c = rhs_s.component_div(&zs) - rhs_t.component_div(&zt);
            let v = -(&rp + &c);
            let dtheta = chol.solve(&(x.tr_mul(&v.component_mul(&d_inv)) + &rd));
            let dalpha = (v - x * &dtheta).component_mul(&d_inv);
            let ds = (rhs_s + s.component_mul(&dalpha)).component_div(&zs);
            let dt = (rhs_t - t.component_mul(&dalpha)).component_div(&zt);
            (dtheta, dalpha, ds, dt)
        };
        let steplen = |da: &DVector<f64>, ds: &DVector<f64>, dt: &DVector<f64>| {
            max_step(&s, ds).min(max_step(&t, dt)).min(max_step(&zs, &(-da))).min(max_step(&zt, da))
        };

        // Predictor.
        let aff_s = -s.component_mul(&zs);
        let aff_t = -t.component_mul(&zt);
        let (_, da, ds, dt) = solve(&aff_s, &aff_t);
        let a = steplen(&da, &ds, &dt);
        let mu_aff = ((&s + &ds * a).dot(&(&zs - &da * a)) + (&t + &dt * a).dot(&(&zt + &da * a))) / (2 * n) as f64;
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

        // Corrector.
        let rhs_s = DVector::from_fn(n, |i, _| sigma * mu - s[i] * zs[i] + ds[i] * da[i]);
        let rhs_t = DVector::from_fn(n, |i, _| sigma * mu - t[i] * zt[i] - dt[i] * da[i]);
        let (dtheta, da, ds, dt) = solve(&rhs_s, &rhs_t);
        let a = (0.995 * steplen(&da, &ds, &dt)).min(1.0);
        theta += dtheta * a;
        zs -= &da * a;
        zt += da * a;
        s += ds * a;
        t += dt * a;
        if !theta.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical(format!("interior-point iterate not finite at iteration {it}")));
        }
    }
    Ok(finish(data, lambda, theta, max_iter, false, mu))
}

fn finish(data: &Dataset, lambda: f64, theta: DVector<f64>, iterations: usize, converged: bool, mu: f64) -> InteriorPointFit {
    let objective = objective(data, &theta, lambda);
    InteriorPointFit { theta, iterations, converged, mu, objective }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amp::dataset::gen_dataset;
    use crate::amp::irls::irls_fit_detailed;
    use crate::noise::ContaminationModel;

    #[test]
    fn agrees_with_irls() {
        let noise = ContaminationModel::symmetric(0.1, 8.0).unwrap();
        let d = gen_dataset(150, 40, noise, 12).unwrap();
        let ip = interior_point_fit(&d, 0.9, 200, 1e-12).unwrap();
        let ir = irls_fit_detailed(&d, 0.9, 2000, 1e-13).unwrap();
        assert!(ip.converged && ir.converged);
        assert!((&ip.theta - &ir.theta).amax() < 1e-7);
        assert!((ip.objective - objective(&d, &ir.theta, 0.9)).abs() < 1e-9 * ip.objective);
    }

    #[test]
    fn rejects_infinite_lambda() {
        let d = gen_dataset(20, 4, ContaminationModel::gaussian(), 1).unwrap();
        assert!(interior_point_fit(&d, f64::INFINITY, 10, 1e-10).is_err());
    }
}

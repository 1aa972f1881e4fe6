//! Independent numerical oracles. Nothing here calls the closed forms under
//! test; scores are re-implemented from their definitions.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;

use huber_pl::noise::{Contamination, ContaminationModel};

/// Gauss-Hermite rule for the weight `exp(-x^2)`: Golub-Welsch eigenvalues
/// as starting points, polished by Newton on the normalized Hermite
/// recurrence, which also yields the weights.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    const PIM4: f64 = 0.751_125_544_464_942_5; // pi^{-1/4}
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i.abs_diff(j) == 1 { (i.max(j) as f64 / 2.0).sqrt() } else { 0.0 }
    });
    let mut guesses: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    guesses.sort_by(|a, b| a.total_cmp(b));
    let nf = n as f64;
    let mut x = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for mut z in guesses {
        let mut pp = 0.0;
        for _ in 0..20 {
            let (mut p1, mut p2) = (PIM4, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x.push(z);
        w.push(2.0 / (pp * pp));
    }
    (x, w)
}

/// `E f(Z)` for standard normal `Z` with an `n`-node Gauss-Hermite rule.
pub fn gh_expect(n: usize, f: impl Fn(f64) -> f64) -> f64 {
    static RULES: Mutex<BTreeMap<usize, Arc<(Vec<f64>, Vec<f64>)>>> = Mutex::new(BTreeMap::new());
    let rule = RULES.lock().unwrap().entry(n).or_insert_with(|| Arc::new(gauss_hermite(n))).clone();
    let (x, w) = &*rule;
    let s2 = std::f64::consts::SQRT_2;
    x.iter().zip(w).map(|(&xi, &wi)| wi * f(s2 * xi)).sum::<f64>() / std::f64::consts::PI.sqrt()
}

/// Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `E f(Z)` by composite Gauss-Legendre on `[-14, 14]`, with panel edges at
/// every point in `breaks` so that piecewise-smooth integrands are
/// integrated to rounding level.
pub fn split_expect(breaks: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    const L: f64 = 14.0;
    let (gx, gw) = gauss_legendre(40);
    let mut edges: Vec<f64> = vec![-L, L];
    edges.extend(breaks.iter().copied().filter(|b| b.is_finite() && b.abs() < L));
    // Unit panels keep each piece well resolved.
    edges.extend((-13..=13).map(|k| k as f64));
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-300);
    let mut total = 0.0;
    for e in edges.windows(2) {
        let (a, b) = (e[0], e[1]);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        total += half * gx.iter().zip(&gw).map(|(&x, &w)| {
            let z = mid + half * x;
            w * f(z) * phi(z)
        }).sum::<f64>();
    }
    total
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`, at most 24
/// levels deep.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 24)
}

/// `Psi(z; r) = r clip(z/(1+r), lambda)`, written out independently.
pub fn big_psi(z: f64, r: f64, lambda: f64) -> f64 {
    let u = z / (1.0 + r);
    r * if u > lambda { lambda } else if u < -lambda { -lambda } else { u }
}

pub fn big_psi_prime(z: f64, r: f64, lambda: f64) -> f64 {
    if z.abs() <= lambda * (1.0 + r) { r / (1.0 + r) } else { 0.0 }
}

/// Which quadrature evaluates the Gaussian expectations.
#[derive(Clone, Copy, Debug)]
pub enum Rule {
    /// Plain Gauss-Hermite with this many nodes.
    Hermite(usize),
    /// Composite Gauss-Legendre split at the kinks.
    Split,
}

/// `E g(W + tau Z)` for the contaminated law, `g` kinked at `+-c`.
fn mixture_expect(tau_sq: f64, noise: &ContaminationModel, c: f64, rule: Rule, g: impl Fn(f64) -> f64) -> f64 {
    let eps = noise.epsilon();
    let sigma = noise.sigma_base();
    let s = (sigma * sigma + tau_sq).sqrt();
    let tau = tau_sq.sqrt();
    let shifted = |a: f64, b: f64| -> f64 {
        // E g(a + b Z)
        if b == 0.0 {
            return g(a);
        }
        match rule {
            Rule::Hermite(n) => gh_expect(n, |z| g(a + b * z)),
            Rule::Split => split_expect(&[(c - a) / b, (-c - a) / b], |z| g(a + b * z)),
        }
    };
    let gauss = shifted(0.0, s);
    let contam = match noise.kind() {
        Contamination::None => 0.0,
        Contamination::SymmetricTwoPoint { mu } => 0.5 * (shifted(mu, tau) + shifted(-mu, tau)),
        Contamination::PointMass { mu } => shifted(mu, tau),
        Contamination::AtInfinity => g(f64::INFINITY),
    };
    (1.0 - eps) * gauss + eps * contam
}

pub fn slope_oracle(tau_sq: f64, r: f64, lambda: f64, noise: &ContaminationModel, rule: Rule) -> f64 {
    mixture_expect(tau_sq, noise, lambda * (1.0 + r), rule, |z| big_psi_prime(z, r, lambda))
}

pub fn variance_oracle(tau_sq: f64, r: f64, lambda: f64, noise: &ContaminationModel, rule: Rule) -> f64 {
    mixture_expect(tau_sq, noise, lambda * (1.0 + r), rule, |z| big_psi(z, r, lambda).powi(2))
}

/// Smallest root of an increasing-crossing function located on a uniform
/// scan of `points` points, then refined by plain bisection.
pub fn scan_root(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> Option<f64> {
    let step = (hi - lo) / (points - 1) as f64;
    let mut prev = lo;
    if f(lo) >= 0.0 {
        return Some(lo);
    }
    for k in 1..points {
        let x = lo + step * k as f64;
        if f(x) >= 0.0 {
            let (mut a, mut b) = (prev, x);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if f(mid) >= 0.0 { b = mid } else { a = mid }
            }
            return Some(0.5 * (a + b));
        }
        prev = x;
    }
    None
}

/// Standard normal cdf via adaptive Simpson of the density from 0.
pub fn normal_cdf(x: f64) -> f64 {
    let half = adaptive_simpson(&phi, 0.0, x.abs(), 1e-14);
    if x >= 0.0 { 0.5 + half } else { 0.5 - half }
}

pub fn normal_pdf(x: f64) -> f64 {
    phi(x)
}

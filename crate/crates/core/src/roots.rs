//! One-dimensional bracketing solvers shared by the numerical modules.

use crate::error::{Error, Result};

/// Bisection on `[lo, hi]` for a function with a sign change.
///
/// Stops when the bracket is narrower than `xtol * max(1, |x|)` or after
/// 200 halvings. Returns the midpoint of the final bracket.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.is_nan() || fhi.is_nan() || flo.signum() == fhi.signum() {
        return Err(Error::NoSolution(format!(
            "no sign change on [{lo:e}, {hi:e}] (f = {flo:e}, {fhi:e})"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= xtol * mid.abs().max(1.0) || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Bisection in relative terms, for strictly positive roots spanning many
/// decades: the bracket is halved geometrically until `hi/lo - 1 <= rtol`.
pub fn bisect_relative<F>(mut f: F, mut lo: f64, mut hi: f64, rtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    debug_assert!(lo > 0.0 && hi > lo);
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.is_nan() || fhi.is_nan() || flo.signum() == fhi.signum() {
        return Err(Error::NoSolution(format!(
            "no sign change on [{lo:e}, {hi:e}] (f = {flo:e}, {fhi:e})"
        )));
    }
    let lo_sign = flo.signum();
    for _ in 0..400 {
        if hi / lo - 1.0 <= rtol {
            break;
        }
        let mid = if hi / lo > 4.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub fn golden_section<F>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > xtol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// `n` points spaced logarithmically from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    debug_assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bisect_requires_sign_change() {
        assert!(matches!(
            bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12),
            Err(Error::NoSolution(_))
        ));
    }

    #[test]
    fn relative_bisection_small_root() {
        let r = bisect_relative(|x| x - 3e-7, 1e-12, 1e3, 1e-12).unwrap();
        assert!((r / 3e-7 - 1.0).abs() < 1e-11);
    }

    #[test]
    fn golden_quadratic() {
        let x = golden_section(|x| (x - 0.3) * (x - 0.3), -2.0, 5.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
    }
}

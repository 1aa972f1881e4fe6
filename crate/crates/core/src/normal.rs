//! Standard normal density, distribution function and truncated moments.
//!
//! Everything is built on the complementary error function so that both
//! tails keep full relative precision.

use std::f64::consts::FRAC_1_SQRT_2;

/// 1/sqrt(2*pi)
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn pdf(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function.
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 - cdf(x)`, accurate for large positive `x`.
pub fn sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// `P{|Z| <= k}` for `k >= 0`, i.e. `2 cdf(k) - 1`.
pub fn central_mass(k: f64) -> f64 {
    if k.is_infinite() {
        return 1.0;
    }
    libm::erf(k.abs() * FRAC_1_SQRT_2)
}

/// `P{a <= Z <= b}` without cancellation when both ends sit in one tail.
pub fn interval_mass(a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if a >= 0.0 {
        sf(a) - sf(b)
    } else if b <= 0.0 {
        cdf(b) - cdf(a)
    } else {
        1.0 - cdf(a) - sf(b)
    }
}

/// `E[(mu + tau Z)^2 ; |mu + tau Z| <= c]` for `tau > 0`, `c >= 0`.
///
/// Expands `x^2 = mu^2 + 2 mu tau z + tau^2 z^2` and uses the Gaussian
/// partial moments on `[a, b]`:
/// `int z phi = phi(a) - phi(b)`, `int z^2 phi = P + a phi(a) - b phi(b)`.
pub fn truncated_second_moment(mu: f64, tau: f64, c: f64) -> f64 {
    debug_assert!(tau > 0.0);
    let a = (-c - mu) / tau;
    let b = (c - mu) / tau;
    let mass = interval_mass(a, b);
    let (pa, pb) = (pdf(a), pdf(b));
    // a*phi(a) is 0 at infinite a.
    let apa = if a.is_finite() { a * pa } else { 0.0 };
    let bpb = if b.is_finite() { b * pb } else { 0.0 };
    let m = mu * mu * mass + 2.0 * mu * tau * (pa - pb) + tau * tau * (mass + apa - bpb);
    m.max(0.0)
}

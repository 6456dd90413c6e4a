//! Scalar normal density and distribution functions with tail-stable logarithms.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// `ln(sqrt(2π))`
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Below this value of Φ the log-cdf switches to the asymptotic lower-tail series.
pub const LOG_CDF_TAIL_SWITCH: f64 = 1e-280;

/// Standard normal density φ(z).
#[inline]
pub fn std_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

#[inline]
pub fn std_log_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

/// Standard normal cdf Φ(z), accurate in relative terms in the lower tail.
#[inline]
pub fn std_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// ln Φ(z) without underflow for any finite z.
pub fn std_log_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z == f64::INFINITY {
        return 0.0;
    }
    if z == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if z > 0.0 {
        // upper half: Φ = 1 - Q with Q small
        return (-0.5 * libm::erfc(z * FRAC_1_SQRT_2)).ln_1p();
    }
    let p = std_cdf(z);
    if p >= LOG_CDF_TAIL_SWITCH {
        return p.ln();
    }
    log_cdf_lower_tail(z)
}

/// Asymptotic expansion ln Φ(z) = ln φ(z) − ln(−z) + ln(1 − 1/z² + 3/z⁴ − 15/z⁶ + …), z ≪ 0.
fn log_cdf_lower_tail(z: f64) -> f64 {
    let r = 1.0 / (z * z);
    // (2j-1)!! coefficients with alternating signs
    let mut term = 1.0;
    let mut series = 1.0;
    for j in 1..=6 {
        term *= -((2 * j - 1) as f64) * r;
        series += term;
    }
    std_log_pdf(z) - (-z).ln() + series.ln()
}

/// Inverse Mills ratio λ(z) = φ(z)/Φ(z), the derivative of ln Φ.
#[inline]
pub fn inverse_mills(z: f64) -> f64 {
    (std_log_pdf(z) - std_log_cdf(z)).exp()
}

/// φ(x; μ, σ²)
#[inline]
pub fn pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    std_pdf((x - mu) / sigma) / sigma
}

#[inline]
pub fn log_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    std_log_pdf((x - mu) / sigma) - sigma.ln()
}

/// Φ((x − μ)/σ)
#[inline]
pub fn cdf(x: f64, mu: f64, sigma: f64) -> f64 {
    std_cdf((x - mu) / sigma)
}

#[inline]
pub fn log_cdf(x: f64, mu: f64, sigma: f64) -> f64 {
    std_log_cdf((x - mu) / sigma)
}

/// ln(e^a + e^b) that tolerates −∞ arguments.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

//! Special functions. Gamma-family functions come from `statrs`, the
//! complementary error function from `libm` (statrs' version is only good to
//! about 1e-11), and trigamma is implemented here.

pub use statrs::function::beta::{beta_reg, ln_beta};
pub use libm::erfc;
pub use statrs::function::gamma::{digamma, gamma_lr, gamma_ur, ln_gamma};

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// ln(2π)
pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Second derivative of ln Γ, via upward recurrence to x ≥ 10 and the
/// asymptotic expansion.
pub fn trigamma(x: f64) -> f64 {
    if x.is_nan() || x == f64::NEG_INFINITY {
        return f64::NAN;
    }
    if x <= 0.0 && x.floor() == x {
        return f64::INFINITY;
    }
    if x < 0.0 {
        // reflection: ψ1(1-x) + ψ1(x) = π² / sin²(πx)
        let s = (PI * x).sin();
        return -trigamma(1.0 - x) + PI * PI / (s * s);
    }
    let mut acc = 0.0;
    let mut z = x;
    while z < 10.0 {
        acc += 1.0 / (z * z);
        z += 1.0;
    }
    let w = 1.0 / (z * z);
    // 1/z + 1/2z² + Σ B₂ₖ / z^(2k+1)
    let bernoulli = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0];
    let tail = bernoulli.iter().rev().fold(0.0, |acc, b| b + w * acc);
    let series = 1.0 / z + w / 2.0 + w / z * tail;
    acc + series
}

/// Standard normal density.
pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Logistic sigmoid.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Distribution function of a Student-t with `nu` degrees of freedom.
pub fn student_t_cdf(x: f64, nu: f64) -> f64 {
    if x.is_infinite() {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    let x2 = x * x;
    if x2 < nu {
        // central mass P(|T| < |x|), accurate near the median
        let central = 0.5 * beta_reg(0.5, nu / 2.0, x2 / (nu + x2));
        return if x > 0.0 { 0.5 + central } else { 0.5 - central };
    }
    let tail = 0.5 * beta_reg(nu / 2.0, 0.5, nu / (nu + x2));
    if x > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

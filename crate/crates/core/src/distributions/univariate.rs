//! Univariate laws. Parameter vectors are assumed validated by the caller.
//!
//! Parametrizations:
//! - `norm`  (μ, σ), σ the standard deviation
//! - `std`   (μ, φ, ν), unstandardized Student-t with scale φ
//! - `sstd`  (μ, σ, ξ, ν), Fernandez-Steel skew-t recentred so that μ and σ
//!   are the mean and standard deviation
//! - `ald`   (θ, σ, κ), asymmetric Laplace of Kotz, Kozubowski and Podgórski
//! - `poi`   (λ) intensity
//! - `gamma` (s, α) scale and shape
//! - `exp`   (λ) rate
//! - `beta`  (β, α) with β in the scale slot and α in the shape slot

use std::f64::consts::{LN_2, PI, SQRT_2};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Beta as BetaSampler, Distribution as _, Exp1, Gamma as GammaSampler, Poisson, StandardNormal, StudentT};

use super::DistributionId;
use crate::special::{
    beta_reg, digamma, gamma_lr, gamma_ur, ln_beta, ln_gamma, norm_cdf, student_t_cdf, trigamma,
    LN_2PI,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Support {
    Interior,
    Boundary,
    Outside,
}

fn support(id: DistributionId, y: f64) -> Support {
    use DistributionId::*;
    if !y.is_finite() {
        return Support::Outside;
    }
    match id {
        Norm | Std | Sstd | Ald => Support::Interior,
        Poi => {
            if y >= 0.0 && y.fract() == 0.0 {
                Support::Interior
            } else {
                Support::Outside
            }
        }
        Gamma | Exp => match y {
            y if y > 0.0 => Support::Interior,
            y if y == 0.0 => Support::Boundary,
            _ => Support::Outside,
        },
        Beta => match y {
            y if y > 0.0 && y < 1.0 => Support::Interior,
            y if y == 0.0 || y == 1.0 => Support::Boundary,
            _ => Support::Outside,
        },
        Mvnorm | Mvt => unreachable!("multivariate law routed to univariate module"),
    }
}

/// (c - 1) ln(x) with the convention 0 · ln 0 = 0, so boundary densities come
/// out as -∞, finite, or +∞ as appropriate.
fn power_term(c_minus_one: f64, ln_x: f64) -> f64 {
    if c_minus_one == 0.0 {
        0.0
    } else {
        c_minus_one * ln_x
    }
}

/// Constants of the recentred skew-t.
struct SkewT {
    m1: f64,
    mean_shift: f64,
    sd: f64,
    g: f64,
}

impl SkewT {
    fn new(xi: f64, nu: f64) -> Self {
        let m1 = 2.0 * (nu - 2.0).sqrt() / ((nu - 1.0) * ln_beta(0.5, nu / 2.0).exp());
        let mean_shift = m1 * (xi - 1.0 / xi);
        let sd = ((1.0 - m1 * m1) * (xi * xi + 1.0 / (xi * xi)) + 2.0 * m1 * m1 - 1.0).sqrt();
        SkewT { m1, mean_shift, sd, g: 2.0 / (xi + 1.0 / xi) }
    }
}

/// Log-density of the unit-variance Student-t at u.
fn ln_std_t(u: f64, nu: f64) -> f64 {
    ln_gamma((nu + 1.0) / 2.0)
        - ln_gamma(nu / 2.0)
        - 0.5 * (PI * (nu - 2.0)).ln()
        - (nu + 1.0) / 2.0 * (1.0 + u * u / (nu - 2.0)).ln()
}

/// Distribution function of the unit-variance Student-t.
fn std_t_cdf(u: f64, nu: f64) -> f64 {
    student_t_cdf(u * (nu / (nu - 2.0)).sqrt(), nu)
}

pub(super) fn log_density(id: DistributionId, y: f64, th: &[f64]) -> Option<f64> {
    use DistributionId::*;
    if support(id, y) == Support::Outside {
        return None;
    }
    let v = match id {
        Norm => {
            let z = (y - th[0]) / th[1];
            -0.5 * LN_2PI - th[1].ln() - 0.5 * z * z
        }
        Std => {
            let (mu, phi, nu) = (th[0], th[1], th[2]);
            let e = y - mu;
            ln_gamma((nu + 1.0) / 2.0)
                - ln_gamma(nu / 2.0)
                - phi.ln()
                - 0.5 * (PI * nu).ln()
                - (nu + 1.0) / 2.0 * (1.0 + e * e / (nu * phi * phi)).ln()
        }
        Sstd => {
            let (mu, sigma, xi, nu) = (th[0], th[1], th[2], th[3]);
            let k = SkewT::new(xi, nu);
            let z = (y - mu) / sigma * k.sd + k.mean_shift;
            let skew = if z >= 0.0 { xi } else { 1.0 / xi };
            k.g.ln() + ln_std_t(z / skew, nu) + k.sd.ln() - sigma.ln()
        }
        Ald => {
            let (loc, sigma, kappa) = (th[0], th[1], th[2]);
            let (dp, dm) = ((y - loc).max(0.0), (loc - y).max(0.0));
            0.5 * LN_2 - sigma.ln() + kappa.ln() - (1.0 + kappa * kappa).ln()
                - SQRT_2 / sigma * (kappa * dp + dm / kappa)
        }
        Poi => {
            let lambda = th[0];
            y * lambda.ln() - lambda - ln_gamma(y + 1.0)
        }
        Gamma => {
            let (s, alpha) = (th[0], th[1]);
            power_term(alpha - 1.0, y.ln()) - y / s - ln_gamma(alpha) - alpha * s.ln()
        }
        Exp => th[0].ln() - th[0] * y,
        Beta => {
            let (b, a) = (th[0], th[1]);
            power_term(a - 1.0, y.ln()) + power_term(b - 1.0, (1.0 - y).ln()) - ln_beta(a, b)
        }
        Mvnorm | Mvt => unreachable!(),
    };
    Some(v)
}

/// Writes the score into `g` and returns the log-density. `None` when y is
/// outside the interior of the support.
pub(super) fn log_density_and_score(id: DistributionId, y: f64, th: &[f64], g: &mut [f64]) -> Option<f64> {
    use DistributionId::*;
    if support(id, y) != Support::Interior {
        return None;
    }
    let ll = match id {
        Norm => {
            let (mu, sigma) = (th[0], th[1]);
            let e = y - mu;
            let s2 = sigma * sigma;
            g[0] = e / s2;
            g[1] = -1.0 / sigma + e * e / (s2 * sigma);
            -0.5 * LN_2PI - sigma.ln() - 0.5 * e * e / s2
        }
        Std => {
            let (mu, phi, nu) = (th[0], th[1], th[2]);
            let e = y - mu;
            let e2 = e * e;
            let denom = nu * phi * phi + e2;
            let log1q = (denom / (nu * phi * phi)).ln();
            let a = (nu + 1.0) / 2.0;
            g[0] = (nu + 1.0) * e / denom;
            g[1] = -1.0 / phi + (nu + 1.0) * e2 / (phi * denom);
            g[2] = 0.5 * digamma(a) - 0.5 * digamma(nu / 2.0) - 0.5 / nu - 0.5 * log1q
                + (nu + 1.0) * e2 / (2.0 * nu * denom);
            ln_gamma(a) - ln_gamma(nu / 2.0) - phi.ln() - 0.5 * (PI * nu).ln() - a * log1q
        }
        Sstd => return sstd_score(y, th, g),
        Ald => {
            let (loc, sigma, kappa) = (th[0], th[1], th[2]);
            if y == loc {
                // the density has a kink at its mode
                return None;
            }
            let (dp, dm) = ((y - loc).max(0.0), (loc - y).max(0.0));
            let above = y > loc;
            g[0] = SQRT_2 / sigma * if above { kappa } else { -1.0 / kappa };
            g[1] = -1.0 / sigma + SQRT_2 / (sigma * sigma) * (kappa * dp + dm / kappa);
            g[2] = 1.0 / kappa - 2.0 * kappa / (1.0 + kappa * kappa)
                - SQRT_2 / sigma * (dp - dm / (kappa * kappa));
            0.5 * LN_2 - sigma.ln() + kappa.ln() - (1.0 + kappa * kappa).ln()
                - SQRT_2 / sigma * (kappa * dp + dm / kappa)
        }
        Poi => {
            let lambda = th[0];
            g[0] = y / lambda - 1.0;
            y * lambda.ln() - lambda - ln_gamma(y + 1.0)
        }
        Gamma => {
            let (s, alpha) = (th[0], th[1]);
            let ly = y.ln();
            g[0] = -alpha / s + y / (s * s);
            g[1] = -digamma(alpha) - s.ln() + ly;
            (alpha - 1.0) * ly - y / s - ln_gamma(alpha) - alpha * s.ln()
        }
        Exp => {
            let lambda = th[0];
            g[0] = 1.0 / lambda - y;
            lambda.ln() - lambda * y
        }
        Beta => {
            let (b, a) = (th[0], th[1]);
            let (ly, l1y) = (y.ln(), (1.0 - y).ln());
            let dab = digamma(a + b);
            g[0] = l1y - digamma(b) + dab;
            g[1] = ly - digamma(a) + dab;
            (a - 1.0) * ly + (b - 1.0) * l1y - ln_beta(a, b)
        }
        Mvnorm | Mvt => unreachable!(),
    };
    Some(ll)
}

fn sstd_score(y: f64, th: &[f64], g: &mut [f64]) -> Option<f64> {
    let (mu, sigma, xi, nu) = (th[0], th[1], th[2], th[3]);
    let k = SkewT::new(xi, nu);
    let x = (y - mu) / sigma;
    let z = x * k.sd + k.mean_shift;
    let (skew, dskew) = if z >= 0.0 { (xi, 1.0) } else { (1.0 / xi, -1.0 / (xi * xi)) };
    let u = z / skew;
    let nm2 = nu - 2.0;
    // d ln f(u) / du for the unit-variance t
    let dldu = -(nu + 1.0) * u / (nm2 + u * u);

    g[0] = dldu * k.sd / skew * (-1.0 / sigma);
    g[1] = dldu * k.sd / skew * (-x / sigma) - 1.0 / sigma;

    let dlng_dxi = -(1.0 - 1.0 / (xi * xi)) / (xi + 1.0 / xi);
    let dmean_dxi = k.m1 * (1.0 + 1.0 / (xi * xi));
    let dsd_dxi = (1.0 - k.m1 * k.m1) * (xi - 1.0 / (xi * xi * xi)) / k.sd;
    let du_dxi = (x * dsd_dxi + dmean_dxi) / skew - z * dskew / (skew * skew);
    g[2] = dlng_dxi + dldu * du_dxi + dsd_dxi / k.sd;

    let dm1_dnu = k.m1
        * (0.5 / nm2 - 1.0 / (nu - 1.0) - 0.5 * digamma(nu / 2.0) + 0.5 * digamma((nu + 1.0) / 2.0));
    let dmean_dnu = dm1_dnu * (xi - 1.0 / xi);
    let dsd_dnu = k.m1 * dm1_dnu * (2.0 - xi * xi - 1.0 / (xi * xi)) / k.sd;
    let du_dnu = (x * dsd_dnu + dmean_dnu) / skew;
    let dl_dnu = 0.5 * digamma((nu + 1.0) / 2.0) - 0.5 * digamma(nu / 2.0) - 0.5 / nm2
        - 0.5 * (1.0 + u * u / nm2).ln()
        + (nu + 1.0) * u * u / (2.0 * nm2 * (nm2 + u * u));
    g[3] = dl_dnu + dldu * du_dnu + dsd_dnu / k.sd;

    Some(k.g.ln() + ln_std_t(u, nu) + k.sd.ln() - sigma.ln())
}

/// Analytic Fisher information in the natural parametrization.
pub(super) fn information(id: DistributionId, th: &[f64]) -> DMatrix<f64> {
    use DistributionId::*;
    match id {
        Norm => {
            let s2 = th[1] * th[1];
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0 / s2, 2.0 / s2]))
        }
        Std => {
            let (phi, nu) = (th[1], th[2]);
            let mut m = DMatrix::zeros(3, 3);
            m[(0, 0)] = (nu + 1.0) / ((nu + 3.0) * phi * phi);
            m[(1, 1)] = 2.0 * nu / ((nu + 3.0) * phi * phi);
            let c = -2.0 / ((nu + 1.0) * (nu + 3.0) * phi);
            m[(1, 2)] = c;
            m[(2, 1)] = c;
            m[(2, 2)] = 0.25 * (trigamma(nu / 2.0) - trigamma((nu + 1.0) / 2.0))
                - (nu + 5.0) / (2.0 * nu * (nu + 1.0) * (nu + 3.0));
            m
        }
        Ald => {
            let (sigma, kappa) = (th[1], th[2]);
            let k2 = kappa * kappa;
            let mut m = DMatrix::zeros(3, 3);
            m[(0, 0)] = 2.0 / (sigma * sigma);
            m[(1, 1)] = 1.0 / (sigma * sigma);
            m[(2, 2)] = 1.0 / k2 + 4.0 / ((1.0 + k2) * (1.0 + k2));
            let t_k = -2.0 * SQRT_2 / (sigma * (1.0 + k2));
            let s_k = -(1.0 - k2) / (sigma * kappa * (1.0 + k2));
            m[(0, 2)] = t_k;
            m[(2, 0)] = t_k;
            m[(1, 2)] = s_k;
            m[(2, 1)] = s_k;
            m
        }
        Poi => DMatrix::from_element(1, 1, 1.0 / th[0]),
        Exp => DMatrix::from_element(1, 1, 1.0 / (th[0] * th[0])),
        Gamma => {
            let (s, alpha) = (th[0], th[1]);
            DMatrix::from_row_slice(2, 2, &[alpha / (s * s), 1.0 / s, 1.0 / s, trigamma(alpha)])
        }
        Beta => {
            let (b, a) = (th[0], th[1]);
            let tab = trigamma(a + b);
            DMatrix::from_row_slice(2, 2, &[trigamma(b) - tab, -tab, -tab, trigamma(a) - tab])
        }
        Sstd | Mvnorm | Mvt => unreachable!("identity-only distributions have no information path"),
    }
}

pub(super) fn sample<R: Rng + ?Sized>(id: DistributionId, th: &[f64], rng: &mut R) -> f64 {
    use DistributionId::*;
    match id {
        Norm => th[0] + th[1] * rng.sample::<f64, _>(StandardNormal),
        Std => th[0] + th[1] * StudentT::new(th[2]).expect("validated shape").sample(rng),
        Sstd => {
            let (mu, sigma, xi, nu) = (th[0], th[1], th[2], th[3]);
            let k = SkewT::new(xi, nu);
            let t = StudentT::new(nu).expect("validated shape").sample(rng) * ((nu - 2.0) / nu).sqrt();
            let weight = xi / (xi + 1.0 / xi);
            let u: f64 = rng.random::<f64>() - weight;
            let (skew, sign) = if u > 0.0 { (xi, 1.0) } else { (1.0 / xi, -1.0) };
            let r = -t.abs() / skew * sign;
            mu + sigma * (r - k.mean_shift) / k.sd
        }
        Ald => {
            let (loc, sigma, kappa) = (th[0], th[1], th[2]);
            let e: f64 = rng.sample(Exp1);
            let p_above = 1.0 / (1.0 + kappa * kappa);
            if rng.random::<f64>() < p_above {
                loc + sigma / (SQRT_2 * kappa) * e
            } else {
                loc - sigma * kappa / SQRT_2 * e
            }
        }
        Poi => Poisson::new(th[0]).expect("validated intensity").sample(rng),
        Gamma => GammaSampler::new(th[1], th[0]).expect("validated gamma").sample(rng),
        Exp => rng.sample::<f64, _>(Exp1) / th[0],
        Beta => BetaSampler::new(th[1], th[0]).expect("validated beta").sample(rng),
        Mvnorm | Mvt => unreachable!(),
    }
}

pub(super) fn moments(id: DistributionId, th: &[f64]) -> (f64, f64) {
    use DistributionId::*;
    match id {
        Norm => (th[0], th[1] * th[1]),
        Std => {
            let (phi, nu) = (th[1], th[2]);
            let var = if nu > 2.0 { nu / (nu - 2.0) * phi * phi } else { f64::NAN };
            (th[0], var)
        }
        Sstd => (th[0], th[1] * th[1]),
        Ald => {
            let (loc, sigma, kappa) = (th[0], th[1], th[2]);
            let mean = loc + sigma / SQRT_2 * (1.0 / kappa - kappa);
            let var = sigma * sigma / 2.0 * (1.0 / (kappa * kappa) + kappa * kappa);
            (mean, var)
        }
        Poi => (th[0], th[0]),
        Gamma => (th[1] * th[0], th[1] * th[0] * th[0]),
        Exp => (1.0 / th[0], 1.0 / (th[0] * th[0])),
        Beta => {
            let (b, a) = (th[0], th[1]);
            let s = a + b;
            (a / s, a * b / (s * s * (s + 1.0)))
        }
        Mvnorm | Mvt => unreachable!(),
    }
}

pub(super) fn cdf(id: DistributionId, th: &[f64], x: f64) -> f64 {
    use DistributionId::*;
    match id {
        Norm => norm_cdf((x - th[0]) / th[1]),
        Std => student_t_cdf((x - th[0]) / th[1], th[2]),
        Sstd => {
            let (mu, sigma, xi, nu) = (th[0], th[1], th[2], th[3]);
            if x.is_infinite() {
                return if x > 0.0 { 1.0 } else { 0.0 };
            }
            let k = SkewT::new(xi, nu);
            let z = (x - mu) / sigma * k.sd + k.mean_shift;
            if z < 0.0 {
                k.g / xi * std_t_cdf(z * xi, nu)
            } else {
                1.0 - k.g * xi * std_t_cdf(-z / xi, nu)
            }
        }
        Ald => {
            let (loc, sigma, kappa) = (th[0], th[1], th[2]);
            let k2 = kappa * kappa;
            if x < loc {
                k2 / (1.0 + k2) * (-SQRT_2 / (sigma * kappa) * (loc - x)).exp()
            } else {
                1.0 - 1.0 / (1.0 + k2) * (-SQRT_2 * kappa / sigma * (x - loc)).exp()
            }
        }
        Poi => {
            if x < 0.0 {
                0.0
            } else if x.is_infinite() {
                1.0
            } else {
                gamma_ur(x.floor() + 1.0, th[0])
            }
        }
        Gamma => {
            if x <= 0.0 {
                0.0
            } else if x.is_infinite() {
                1.0
            } else {
                gamma_lr(th[1], x / th[0])
            }
        }
        Exp => {
            if x <= 0.0 {
                0.0
            } else {
                -(-th[0] * x).exp_m1()
            }
        }
        Beta => {
            if x <= 0.0 {
                0.0
            } else if x >= 1.0 {
                1.0
            } else {
                beta_reg(th[1], th[0], x)
            }
        }
        Mvnorm | Mvt => unreachable!(),
    }
}

pub(super) fn quantile(id: DistributionId, th: &[f64], p: f64) -> f64 {
    use DistributionId::*;
    let f = |x: f64| cdf(id, th, x);
    if id == Poi {
        // smallest integer k with F(k) ≥ p
        let lambda = th[0];
        let mut k = (lambda - 10.0 * lambda.sqrt()).floor().max(0.0);
        while f(k) >= p && k > 0.0 {
            k = (k - 1.0 - lambda.sqrt().floor()).max(0.0);
        }
        while f(k) < p {
            k += 1.0;
        }
        return k;
    }

    let (mean, var) = moments(id, th);
    let sd = var.sqrt();
    let (lo_support, hi_support) = match id {
        Gamma | Exp => (0.0, f64::INFINITY),
        Beta => (0.0, 1.0),
        _ => (f64::NEG_INFINITY, f64::INFINITY),
    };
    let mut step = sd.max(1e-300);
    let mut lo = (mean - step).max(lo_support);
    while f(lo) > p && lo > lo_support {
        step *= 2.0;
        lo = (mean - step).max(lo_support);
    }
    let mut step = sd.max(1e-300);
    let mut hi = (mean + step).min(hi_support);
    while f(hi) < p && hi < hi_support {
        step *= 2.0;
        hi = (mean + step).min(hi_support);
    }
    // bisection on [lo, hi] with F(lo) ≤ p ≤ F(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

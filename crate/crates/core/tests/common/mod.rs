#![allow(dead_code)]

use gas_core::distributions::{Distribution, DistributionId};
use gas_core::links::correlation_from_angles;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const UNIVARIATE: [DistributionId; 8] = [
    DistributionId::Norm,
    DistributionId::Std,
    DistributionId::Sstd,
    DistributionId::Ald,
    DistributionId::Poi,
    DistributionId::Gamma,
    DistributionId::Exp,
    DistributionId::Beta,
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uni(id: DistributionId) -> Distribution {
    Distribution::univariate(id).unwrap()
}

/// Random correlation entries in row-major lower-triangular order.
pub fn random_correlations<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let angles: Vec<f64> = (0..n * (n - 1) / 2).map(|_| rng.random_range(0.6..2.5)).collect();
    let r = correlation_from_angles(&angles, n).unwrap();
    let mut out = Vec::new();
    for h in 1..n {
        for k in 0..h {
            out.push(r[(h, k)]);
        }
    }
    out
}

/// A random parameter vector comfortably inside the admissible region.
pub fn random_theta<R: Rng>(dist: &Distribution, rng: &mut R) -> Vec<f64> {
    use DistributionId::*;
    let mut u = |lo: f64, hi: f64| rng.random_range(lo..hi);
    match dist.id {
        Norm => vec![u(-2.0, 2.0), u(0.3, 3.0)],
        Std => vec![u(-2.0, 2.0), u(0.3, 3.0), u(2.5, 40.0)],
        Sstd => vec![u(-2.0, 2.0), u(0.3, 3.0), u(0.5, 1.8), u(3.0, 30.0)],
        Ald => vec![u(-2.0, 2.0), u(0.3, 3.0), u(0.4, 2.5)],
        Poi => vec![u(0.5, 20.0)],
        Gamma => vec![u(0.3, 3.0), u(0.5, 10.0)],
        Exp => vec![u(0.2, 5.0)],
        Beta => vec![u(0.7, 8.0), u(0.7, 8.0)],
        Mvnorm | Mvt => {
            let n = dist.dim;
            let mut theta: Vec<f64> = (0..n).map(|_| u(-1.0, 1.0)).collect();
            theta.extend((0..n).map(|_| u(0.5, 2.0)));
            theta.extend(random_correlations(n, rng));
            if dist.id == Mvt {
                theta.push(rng.random_range(3.0..30.0));
            }
            theta
        }
    }
}

/// Five-point central difference of `f` along coordinate `i`.
pub fn fd_partial<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], i: usize, h: f64) -> f64 {
    let mut p = x.to_vec();
    let mut at = |d: f64| {
        p[i] = x[i] + d;
        f(&p)
    };
    (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h)
}

/// Relative error ≤ 1e-6, or absolute ≤ 1e-8 near zero.
pub fn close(analytic: f64, numeric: f64) -> bool {
    let err = (analytic - numeric).abs();
    err <= 1e-8 || err <= 1e-6 * analytic.abs()
}

/// Independent digamma: upward recurrence then the asymptotic series.
pub fn digamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 12.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    acc + x.ln() - 0.5 / x
        - x2 * (1.0 / 12.0 - x2 * (1.0 / 120.0 - x2 * (1.0 / 252.0 - x2 * (1.0 / 240.0 - x2 / 132.0))))
}

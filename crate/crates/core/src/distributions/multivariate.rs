//! Multivariate Gaussian and Student-t with scale matrix Σ = D R D.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution as _, StandardNormal};

use super::{Distribution, DistributionId};
use crate::error::{GasError, Result};
use crate::special::{digamma, ln_gamma, LN_2PI};

/// Builds R from the row-major lower-triangular correlation entries.
pub(crate) fn correlation_matrix(n: usize, rho: &[f64]) -> DMatrix<f64> {
    let mut r = DMatrix::identity(n, n);
    let mut idx = 0;
    for h in 1..n {
        for k in 0..h {
            r[(h, k)] = rho[idx];
            r[(k, h)] = rho[idx];
            idx += 1;
        }
    }
    r
}

pub(super) fn correlation_cholesky(dist: &Distribution, theta: &[f64]) -> Result<Cholesky<f64, Dyn>> {
    let n = dist.dim;
    let rho = &theta[2 * n..2 * n + n * (n - 1) / 2];
    Cholesky::new(correlation_matrix(n, rho))
        .ok_or(GasError::ParamOutOfBounds { index: 2 * n, value: rho[0] })
}

struct Parts {
    n: usize,
    z: DVector<f64>,
    // R⁻¹ z
    v: DVector<f64>,
    // z' R⁻¹ z
    q: f64,
    log_det_r: f64,
    sum_log_sigma: f64,
    chol: Cholesky<f64, Dyn>,
}

fn parts(dist: &Distribution, y: &[f64], theta: &[f64]) -> Result<Parts> {
    let n = dist.dim;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(GasError::SupportViolation { dist: dist.id.label().into(), value: y.to_vec() });
    }
    let chol = correlation_cholesky(dist, theta)?;
    let z = DVector::from_fn(n, |i, _| (y[i] - theta[i]) / theta[n + i]);
    let v = chol.solve(&z);
    let q = z.dot(&v);
    let log_det_r = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let sum_log_sigma = theta[n..2 * n].iter().map(|s| s.ln()).sum();
    Ok(Parts { n, z, v, q, log_det_r, sum_log_sigma, chol })
}

fn log_density_from(dist: &Distribution, p: &Parts, theta: &[f64]) -> f64 {
    let n = p.n as f64;
    match dist.id {
        DistributionId::Mvnorm => -0.5 * n * LN_2PI - p.sum_log_sigma - 0.5 * p.log_det_r - 0.5 * p.q,
        DistributionId::Mvt => {
            let nu = theta[theta.len() - 1];
            ln_gamma((nu + n) / 2.0) - ln_gamma(nu / 2.0) - 0.5 * n * (nu * std::f64::consts::PI).ln()
                - p.sum_log_sigma
                - 0.5 * p.log_det_r
                - (nu + n) / 2.0 * (1.0 + p.q / nu).ln()
        }
        _ => unreachable!(),
    }
}

pub(super) fn log_density(dist: &Distribution, y: &[f64], theta: &[f64]) -> Result<f64> {
    let p = parts(dist, y, theta)?;
    Ok(log_density_from(dist, &p, theta))
}

pub(super) fn log_density_and_score(
    dist: &Distribution,
    y: &[f64],
    theta: &[f64],
    g: &mut [f64],
) -> Result<f64> {
    let p = parts(dist, y, theta)?;
    let n = p.n;
    let nf = n as f64;
    // weight on the quadratic form: 1 for the Gaussian, (ν+N)/(ν+q) for the t
    let w = match dist.id {
        DistributionId::Mvt => {
            let nu = theta[theta.len() - 1];
            (nu + nf) / (nu + p.q)
        }
        _ => 1.0,
    };
    let r_inv = p.chol.inverse();
    for i in 0..n {
        let sigma = theta[n + i];
        g[i] = w * p.v[i] / sigma;
        g[n + i] = -1.0 / sigma + w * p.z[i] * p.v[i] / sigma;
    }
    let mut idx = 2 * n;
    for h in 1..n {
        for k in 0..h {
            g[idx] = -r_inv[(h, k)] + w * p.v[h] * p.v[k];
            idx += 1;
        }
    }
    if dist.id == DistributionId::Mvt {
        let nu = theta[theta.len() - 1];
        g[idx] = 0.5 * digamma((nu + nf) / 2.0) - 0.5 * digamma(nu / 2.0) - nf / (2.0 * nu)
            - 0.5 * (1.0 + p.q / nu).ln()
            + (nu + nf) * p.q / (2.0 * nu * (nu + p.q));
    }
    Ok(log_density_from(dist, &p, theta))
}

pub(super) fn sample<R: Rng + ?Sized>(
    dist: &Distribution,
    theta: &[f64],
    rng: &mut R,
    out: &mut [f64],
) -> Result<()> {
    let n = dist.dim;
    let chol = correlation_cholesky(dist, theta)?;
    let eps = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let x = chol.l() * eps;
    let mix = match dist.id {
        DistributionId::Mvt => {
            let nu = theta[theta.len() - 1];
            let c: f64 = ChiSquared::new(nu).expect("validated shape").sample(rng);
            (nu / c).sqrt()
        }
        _ => 1.0,
    };
    for i in 0..n {
        out[i] = theta[i] + theta[n + i] * x[i] * mix;
    }
    Ok(())
}

pub(super) fn moments(dist: &Distribution, theta: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = dist.dim;
    let r = correlation_matrix(n, &theta[2 * n..2 * n + n * (n - 1) / 2]);
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(&theta[n..2 * n]));
    let mut cov = &d * r * &d;
    if dist.id == DistributionId::Mvt {
        let nu = theta[theta.len() - 1];
        if nu <= 2.0 {
            return Err(GasError::MomentUndefined(dist.id.label().into()));
        }
        cov *= nu / (nu - 2.0);
    }
    Ok((DVector::from_column_slice(&theta[..n]), cov))
}

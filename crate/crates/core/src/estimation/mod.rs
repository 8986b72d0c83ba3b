//! Maximum-likelihood estimation of ξ = (κ, A, B).
//!
//! The optimizer works on an unconstrained vector laid out as
//! `[κ_1..κ_J, α_1..α_G, β_1..β_G]` with one (α, β) pair per coefficient
//! group, mapped back through `a = 5·logistic(α)` and
//! `b = (1 − 1e-6)·logistic(β)`. Coordinates outside every group keep
//! a = b = 0.

pub mod optimizer;

use std::time::Instant;

use nalgebra::{Cholesky, DMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionId, ParamVector, Role};
use crate::error::{GasError, Result};
use crate::links::Link;
use crate::model::{self, Coefficients, FilterOutput, GasSpec, Series};
use crate::special::{logistic, norm_cdf};
use optimizer::{Minimum, Tolerances};

/// Upper bound of the a coefficients.
pub const A_MAX: f64 = 5.0;
/// Upper bound of the b coefficients.
pub const B_MAX: f64 = 1.0 - 1e-6;
/// Objective value substituted when the recursion diverges.
pub const PENALTY: f64 = 1e10;
/// Largest |θ̃| used for logistic-linked starting values.
pub const START_TILDE_CAP: f64 = 4.0;
/// Relative step of the numerical Hessian.
pub const HESSIAN_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub step_tolerance: f64,
    pub grid_a: Vec<f64>,
    pub grid_b: Vec<f64>,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iterations: 500,
            gradient_tolerance: 1e-6,
            step_tolerance: 1e-9,
            grid_a: vec![0.001, 0.01, 0.05, 0.1, 0.3],
            grid_b: vec![0.8, 0.9, 0.95, 0.99],
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_a.is_empty() || self.grid_b.is_empty() {
            return Err(GasError::InvalidArgument("grid search needs candidate a and b values".into()));
        }
        if let Some(a) = self.grid_a.iter().find(|a| !(0.0..A_MAX).contains(*a)) {
            return Err(GasError::InvalidArgument(format!("grid value a = {a} outside [0, {A_MAX})")));
        }
        if let Some(b) = self.grid_b.iter().find(|b| !(0.0..B_MAX).contains(*b)) {
            return Err(GasError::InvalidArgument(format!("grid value b = {b} outside [0, 1)")));
        }
        if !(self.gradient_tolerance > 0.0 && self.step_tolerance > 0.0) {
            return Err(GasError::InvalidArgument("tolerances must be positive".into()));
        }
        Ok(())
    }

    fn tolerances(&self) -> Tolerances {
        Tolerances {
            max_iterations: self.max_iterations,
            gradient_tolerance: self.gradient_tolerance,
            step_tolerance: self.step_tolerance,
        }
    }
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    (p / (1.0 - p)).ln()
}

/// Unconstrained free vector → coefficients.
pub fn decode(spec: &GasSpec, free: &[f64]) -> Result<Coefficients> {
    let j = spec.num_params();
    let groups = spec.coefficient_groups();
    let g = groups.len();
    if free.len() != j + 2 * g {
        return Err(GasError::ShapeMismatch { expected: j + 2 * g, got: free.len() });
    }
    let mut coeffs = Coefficients::constant(free[..j].to_vec());
    for (k, group) in groups.iter().enumerate() {
        let a = A_MAX * logistic(free[j + k]);
        let b = B_MAX * logistic(free[j + g + k]);
        for &i in group {
            coeffs.a_diag[i] = a;
            coeffs.b_diag[i] = b;
        }
    }
    Ok(coeffs)
}

/// Coefficients → unconstrained free vector. a = 0 and b = 0 are pulled
/// just inside the open transform range.
pub fn encode(spec: &GasSpec, coeffs: &Coefficients) -> Result<Vec<f64>> {
    coeffs.validate(spec)?;
    let groups = spec.coefficient_groups();
    let mut free = coeffs.kappa.clone();
    free.extend(groups.iter().map(|g| logit(coeffs.a_diag[g[0]] / A_MAX)));
    free.extend(groups.iter().map(|g| logit(coeffs.b_diag[g[0]] / B_MAX)));
    Ok(free)
}

/// d(constrained)/d(free) for each free coordinate.
fn transform_derivative(spec: &GasSpec, free: &[f64]) -> Vec<f64> {
    let j = spec.num_params();
    let g = spec.coefficient_groups().len();
    free.iter()
        .enumerate()
        .map(|(i, &x)| {
            if i < j {
                1.0
            } else {
                let p = logistic(x);
                let scale = if i < j + g { A_MAX } else { B_MAX };
                scale * p * (1.0 - p)
            }
        })
        .collect()
}

/// Names of the free coefficients in free-vector order.
pub fn coefficient_names(spec: &GasSpec) -> Vec<String> {
    let j = spec.num_params();
    let groups = spec.coefficient_groups();
    let label = |prefix: &str, group: &[usize]| {
        if spec.scalar_parameters {
            format!("{prefix}_{}", spec.dist.role(group[0]).label())
        } else {
            format!("{prefix}{}", group[0] + 1)
        }
    };
    let mut names: Vec<String> = (1..=j).map(|i| format!("kappa{i}")).collect();
    names.extend(groups.iter().map(|g| label("a", g)));
    names.extend(groups.iter().map(|g| label("b", g)));
    names
}

fn objective(spec: &GasSpec, coeffs: &Coefficients, y: &Series) -> Result<f64> {
    match model::log_likelihood(spec, coeffs, y) {
        Ok(ll) if ll.is_finite() => Ok(-ll),
        Ok(_) => Ok(PENALTY),
        Err(
            GasError::NonFiniteState { .. }
            | GasError::ParamOutOfBounds { .. }
            | GasError::SingularInformation(_),
        ) => Ok(PENALTY),
        Err(e) => Err(e),
    }
}

/// −Σ log p(y_t; θ_t) at the coefficients encoded by `free`, or the
/// penalty value when the recursion diverges.
pub fn negative_loglik(spec: &GasSpec, free: &[f64], y: &Series) -> Result<f64> {
    objective(spec, &decode(spec, free)?, y)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

const START_SHAPE: f64 = 8.0;

/// Method-of-moments starting values for the static fit.
fn moment_start(spec: &GasSpec, y: &Series) -> Result<Vec<f64>> {
    let n = spec.dist.dim;
    let cols: Vec<Vec<f64>> = (0..n).map(|i| y.column(i)).collect();
    let x = &cols[0];
    let (m, v) = (mean(x), variance(x));
    let degenerate = || GasError::InvalidArgument("sample has zero variance".into());
    let start = match spec.dist.id {
        DistributionId::Norm => vec![m, v.sqrt()],
        DistributionId::Std => vec![m, (v * (START_SHAPE - 2.0) / START_SHAPE).sqrt(), START_SHAPE],
        DistributionId::Sstd => vec![m, v.sqrt(), 1.0, START_SHAPE],
        DistributionId::Ald => vec![m, v.sqrt(), 1.0],
        DistributionId::Poi => vec![m],
        DistributionId::Exp => vec![1.0 / m],
        DistributionId::Gamma => vec![v / m, m * m / v],
        DistributionId::Beta => {
            let c = m * (1.0 - m) / v - 1.0;
            vec![(1.0 - m) * c, m * c]
        }
        DistributionId::Mvnorm | DistributionId::Mvt => {
            let means: Vec<f64> = cols.iter().map(|c| mean(c)).collect();
            let sds: Vec<f64> = cols.iter().map(|c| variance(c).sqrt()).collect();
            let mut start = means.clone();
            start.extend(&sds);
            for h in 1..n {
                for k in 0..h {
                    let cov = cols[h].iter().zip(&cols[k]).map(|(a, b)| (a - means[h]) * (b - means[k])).sum::<f64>()
                        / y.len() as f64;
                    // shrunk towards zero so the start is safely positive definite
                    start.push(0.9 * cov / (sds[h] * sds[k]));
                }
            }
            if spec.dist.id == DistributionId::Mvt {
                start.push(START_SHAPE);
                for (i, sd) in sds.iter().enumerate() {
                    start[n + i] = sd * ((START_SHAPE - 2.0) / START_SHAPE).sqrt();
                }
            }
            start
        }
    };
    if start.iter().any(|v| !v.is_finite()) {
        return Err(degenerate());
    }
    // keep bounded parameters strictly inside their intervals
    let start: Vec<f64> = start
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let b = spec.dist.bound(i);
            let lo = if b.lower.is_finite() { b.lower + 1e-3 * (1.0 + b.lower.abs()) } else { v };
            let hi = if b.upper.is_finite() { b.upper - 1e-3 * (1.0 + b.upper.abs()) } else { v };
            match spec.dist.role(i) {
                Role::Location if b.lower.is_infinite() => v,
                _ => v.max(lo).min(hi),
            }
        })
        .collect();
    ParamVector::new(spec.dist, start.clone()).map_err(|_| degenerate())?;
    Ok(start)
}

fn check_length(y: &Series, needed: usize) -> Result<()> {
    if y.len() < needed {
        return Err(GasError::InsufficientData { needed, got: y.len() });
    }
    Ok(())
}

/// ML fit of the constant-parameter model (A = B = 0), returned on the
/// natural scale.
pub fn fit_static(spec: &GasSpec, y: &Series) -> Result<ParamVector> {
    Ok(fit_static_inner(spec, y, &OptimizerConfig::default())?.0)
}

fn fit_static_inner(spec: &GasSpec, y: &Series, config: &OptimizerConfig) -> Result<(ParamVector, f64)> {
    check_length(y, 10 * spec.num_params())?;
    if y.dim() != spec.dist.dim {
        return Err(GasError::ShapeMismatch { expected: spec.dist.dim, got: y.dim() });
    }
    // surface support violations before the optimizer sees them
    let probe = interior_point(spec);
    for (t, row) in y.rows().enumerate() {
        if let Err(GasError::SupportViolation { .. }) = spec.dist.log_density(row, &probe) {
            return Err(GasError::SupportViolationAt { dist: spec.dist.id.label().into(), t });
        }
    }
    let start = moment_start(spec, y)?;
    let kappa0 = spec.links.unmap(&start)?;
    let static_spec = spec.clone();
    let scale = 1.0 / y.len() as f64;
    let f = |k: &[f64]| Ok(objective(&static_spec, &Coefficients::constant(k.to_vec()), y)? * scale);
    let m = optimizer::minimize(f, &kappa0, &config.tolerances())?;
    if !m.converged {
        return Err(GasError::NoConvergence(format!(
            "static fit stopped after {} iterations with gradient norm {:e}",
            m.iterations, m.gradient_norm
        )));
    }
    let theta = spec.links.map(&m.x)?;
    Ok((ParamVector::new(spec.dist, theta)?, m.value / scale))
}

/// An interior parameter vector, used only to probe the support.
fn interior_point(spec: &GasSpec) -> Vec<f64> {
    (0..spec.num_params())
        .map(|i| {
            let b = spec.dist.bound(i);
            match (b.lower.is_finite(), b.upper.is_finite()) {
                (true, true) => 0.5 * (b.lower + b.upper),
                (true, false) => b.lower + 1.0,
                _ => 0.0,
            }
        })
        .collect()
}

/// Coefficients for one grid point around a static estimate.
fn grid_point(spec: &GasSpec, static_tilde: &[f64], a: f64, b: f64) -> Coefficients {
    let mut coeffs = Coefficients::constant(static_tilde.to_vec());
    for group in spec.coefficient_groups() {
        for i in group {
            coeffs.a_diag[i] = a;
            coeffs.b_diag[i] = b;
            coeffs.kappa[i] = (1.0 - b) * static_tilde[i];
        }
    }
    coeffs
}

/// Two-stage starting values: static fit, then a grid search over (a, b)
/// shared by all groups with κ targeted at the static estimate. Ties go to
/// the smallest b, then the smallest a.
pub fn initialize(spec: &GasSpec, y: &Series, config: &OptimizerConfig) -> Result<Coefficients> {
    Ok(initialize_inner(spec, y, config)?.0)
}

fn initialize_inner(spec: &GasSpec, y: &Series, config: &OptimizerConfig) -> Result<(Coefficients, f64, f64)> {
    config.validate()?;
    let (theta, static_value) = fit_static_inner(spec, y, config)?;
    let mut tilde = spec.links.unmap(theta.as_slice())?;
    // a static estimate pinned against an interval bound sits where the
    // logistic link is flat, and the search would never leave it
    for (x, link) in tilde.iter_mut().zip(&spec.links.links) {
        if matches!(link, Link::ModifiedLogistic { .. }) {
            *x = x.clamp(-START_TILDE_CAP, START_TILDE_CAP);
        }
    }
    let mut candidates: Vec<(f64, f64)> =
        config.grid_b.iter().flat_map(|&b| config.grid_a.iter().map(move |&a| (a, b))).collect();
    candidates.sort_by(|p, q| p.1.total_cmp(&q.1).then(p.0.total_cmp(&q.0)));
    let values: Vec<Result<f64>> = candidates
        .par_iter()
        .map(|&(a, b)| objective(spec, &grid_point(spec, &tilde, a, b), y))
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        let v = v?;
        if best.is_none_or(|(_, bv)| v < bv) {
            best = Some((i, v));
        }
    }
    let (i, value) = best.expect("non-empty grid");
    let (a, b) = candidates[i];
    Ok((grid_point(spec, &tilde, a, b), value, static_value))
}

/// One free coefficient with its inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub std_error: Option<f64>,
    pub t_stat: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub spec: GasSpec,
    pub coeffs: Coefficients,
    pub estimates: Vec<Estimate>,
    pub unconditional_params: Vec<f64>,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub num_params: usize,
    pub num_obs: usize,
    pub converged: bool,
    pub iterations: usize,
    pub warnings: Vec<String>,
    pub elapsed_seconds: f64,
    pub filter_output: FilterOutput,
}

impl FitResult {
    pub fn std_errors(&self) -> Vec<Option<f64>> {
        self.estimates.iter().map(|e| e.std_error).collect()
    }

    pub fn estimate(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name)
    }
}

/// Standard errors of the free coefficients in their constrained units.
pub fn std_errors(fit: &FitResult, y: &Series) -> Result<Vec<f64>> {
    let free = encode(&fit.spec, &fit.coeffs)?;
    std_errors_at(&fit.spec, &free, y)
}

fn std_errors_at(spec: &GasSpec, free: &[f64], y: &Series) -> Result<Vec<f64>> {
    let f = |x: &[f64]| negative_loglik(spec, x, y);
    let h = optimizer::hessian(&f, free, HESSIAN_STEP)?;
    let sym = (&h + h.transpose()) * 0.5;
    let chol = Cholesky::new(sym).ok_or(GasError::HessianNotPD)?;
    let cov: DMatrix<f64> = chol.inverse();
    let d = transform_derivative(spec, free);
    (0..free.len())
        .map(|i| {
            let v = cov[(i, i)];
            if v > 0.0 && v.is_finite() {
                Ok(d[i].abs() * v.sqrt())
            } else {
                Err(GasError::HessianNotPD)
            }
        })
        .collect()
}

/// Two-sided p-value under the standard normal.
pub fn two_sided_p(t: f64) -> f64 {
    2.0 * (1.0 - norm_cdf(t.abs()))
}

/// Full estimation: starting values, quasi-Newton search, inference.
pub fn fit(spec: &GasSpec, y: &Series, config: &OptimizerConfig) -> Result<FitResult> {
    let started = Instant::now();
    let np = spec.num_free();
    check_length(y, 10 * np)?;
    let (coeffs0, grid_value, static_value) = initialize_inner(spec, y, config)?;
    let mut warnings = Vec::new();
    if grid_value > static_value + 1e-8 {
        warnings.push("grid search did not improve on the static model".into());
    }
    let free0 = encode(spec, &coeffs0)?;
    let scale = 1.0 / y.len() as f64;
    let f = |x: &[f64]| Ok(negative_loglik(spec, x, y)? * scale);
    let mut m: Minimum = optimizer::minimize(f, &free0, &config.tolerances())?;
    // never return a point worse than the starting grid point
    let start_value = negative_loglik(spec, &free0, y)?;
    if m.value / scale > start_value {
        m.x = free0.clone();
        m.value = start_value * scale;
    }
    if !m.converged {
        warnings.push(format!(
            "optimizer stopped after {} iterations (gradient norm {:e})",
            m.iterations, m.gradient_norm
        ));
    }
    let coeffs = decode(spec, &m.x)?;
    let filter_output = model::filter(spec, &coeffs, y)?;
    let loglik = filter_output.total_loglik;
    let ses = match std_errors_at(spec, &m.x, y) {
        Ok(se) => se.into_iter().map(Some).collect(),
        Err(GasError::HessianNotPD) => {
            warnings.push("Hessian is not positive definite; standard errors unavailable".into());
            vec![None; np]
        }
        Err(e) => return Err(e),
    };
    let values = free_values(spec, &coeffs);
    let estimates = coefficient_names(spec)
        .into_iter()
        .zip(values)
        .zip(ses)
        .map(|((name, value), se)| {
            let t = se.map(|s| value / s);
            Estimate { name, value, std_error: se, t_stat: t, p_value: t.map(two_sided_p) }
        })
        .collect();
    let n = y.len() as f64;
    Ok(FitResult {
        spec: spec.clone(),
        unconditional_params: coeffs.unconditional_params(spec)?,
        coeffs,
        estimates,
        loglik,
        aic: 2.0 * np as f64 - 2.0 * loglik,
        bic: np as f64 * n.ln() - 2.0 * loglik,
        num_params: np,
        num_obs: y.len(),
        converged: m.converged,
        iterations: m.iterations,
        warnings,
        elapsed_seconds: started.elapsed().as_secs_f64(),
        filter_output,
    })
}

/// Free coefficients on their constrained scale, in free-vector order.
pub fn free_values(spec: &GasSpec, coeffs: &Coefficients) -> Vec<f64> {
    let groups = spec.coefficient_groups();
    let mut v = coeffs.kappa.clone();
    v.extend(groups.iter().map(|g| coeffs.a_diag[g[0]]));
    v.extend(groups.iter().map(|g| coeffs.b_diag[g[0]]));
    v
}

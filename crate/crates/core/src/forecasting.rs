//! Density forecasts and the rolling re-estimation backtest.
//!
//! One step ahead the predictive density is known exactly from the filter's
//! terminal state. Further ahead it is approximated by simulating
//! independent continuations of the recursion; draw `d` always uses stream
//! `d` of a ChaCha generator seeded with the caller's seed, so the result
//! does not depend on how the draws are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::error::{GasError, Result};
use crate::estimation::{self, FitResult, OptimizerConfig};
use crate::model::{self, Coefficients, GasSpec, Scorer, Series};

/// Largest share of diverging simulated paths tolerated.
pub const MAX_DROPPED_SHARE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentForecast {
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub dist: Distribution,
    pub horizon: usize,
    /// H × J natural parameters; row 0 is exact, later rows are draw averages.
    pub param_forecasts: Vec<Vec<f64>>,
    pub moment_forecasts: Vec<MomentForecast>,
    /// H × kept draws × N simulated observations, when requested.
    pub draws: Option<Vec<Vec<Vec<f64>>>>,
    pub num_draws: usize,
    pub dropped_draws: usize,
    pub seed: u64,
}

fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

/// Empirical mean and covariance (divisor n) of a set of N-vectors.
fn empirical_moments(xs: &[&[f64]]) -> MomentForecast {
    let n = xs[0].len();
    let k = xs.len() as f64;
    let mut mean = vec![0.0; n];
    for x in xs {
        for (m, v) in mean.iter_mut().zip(x.iter()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= k;
    }
    let mut cov = vec![vec![0.0; n]; n];
    for x in xs {
        for i in 0..n {
            for j in 0..n {
                cov[i][j] += (x[i] - mean[i]) * (x[j] - mean[j]);
            }
        }
    }
    for row in &mut cov {
        for c in row {
            *c /= k;
        }
    }
    MomentForecast { mean, covariance: cov }
}

type Path = (Vec<Vec<f64>>, Vec<f64>);

/// Forecasts `horizon` steps ahead from the end of the fitted sample.
pub fn forecast(fit: &FitResult, horizon: usize, num_draws: usize, return_draws: bool, seed: u64) -> Result<ForecastResult> {
    forecast_from(&fit.spec, &fit.coeffs, &fit.filter_output.next_tilde, horizon, num_draws, return_draws, seed)
}

/// Forecasts from an arbitrary one-step-ahead state θ̃_{T+1}.
pub fn forecast_from(
    spec: &GasSpec,
    coeffs: &Coefficients,
    next_tilde: &[f64],
    horizon: usize,
    num_draws: usize,
    return_draws: bool,
    seed: u64,
) -> Result<ForecastResult> {
    if horizon == 0 {
        return Err(GasError::InvalidHorizon(horizon));
    }
    if horizon > 1 && num_draws == 0 {
        return Err(GasError::InvalidArgument("multi-step forecasts need at least one draw".into()));
    }
    coeffs.validate(spec)?;
    let dist = spec.dist;
    let theta1 = spec.links.map(next_tilde)?;
    let (mean1, cov1) = dist.moments(&theta1)?;
    let mut param_forecasts = vec![theta1];
    let mut moment_forecasts =
        vec![MomentForecast { mean: mean1.iter().copied().collect(), covariance: matrix_rows(&cov1) }];

    let (kept, dropped) = if horizon > 1 || return_draws {
        let paths: Vec<Option<Path>> = (0..num_draws)
            .into_par_iter()
            .map(|d| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(d as u64);
                let mut tilde = next_tilde.to_vec();
                match model::simulate_from(spec, coeffs, &mut tilde, horizon, &mut rng) {
                    Ok(path) => Ok(Some(path)),
                    Err(
                        GasError::NonFiniteState { .. }
                        | GasError::SupportViolationAt { .. }
                        | GasError::SingularInformation(_),
                    ) => Ok(None),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<_>>()?;
        let dropped = paths.iter().filter(|p| p.is_none()).count();
        if dropped as f64 > MAX_DROPPED_SHARE * num_draws as f64 {
            return Err(GasError::TooManyDroppedDraws { dropped, total: num_draws });
        }
        (paths.into_iter().flatten().collect::<Vec<Path>>(), dropped)
    } else {
        (Vec::new(), 0)
    };

    let n = dist.dim;
    let j = spec.num_params();
    for h in 1..horizon {
        let k = kept.len() as f64;
        let mut avg = vec![0.0; j];
        for (params, _) in &kept {
            for (a, v) in avg.iter_mut().zip(&params[h]) {
                *a += v;
            }
        }
        avg.iter_mut().for_each(|a| *a /= k);
        param_forecasts.push(avg);
        let obs: Vec<&[f64]> = kept.iter().map(|(_, y)| &y[h * n..(h + 1) * n]).collect();
        moment_forecasts.push(empirical_moments(&obs));
    }
    let draws = return_draws.then(|| {
        (0..horizon)
            .map(|h| kept.iter().map(|(_, y)| y[h * n..(h + 1) * n].to_vec()).collect())
            .collect()
    });
    Ok(ForecastResult {
        dist,
        horizon,
        param_forecasts,
        moment_forecasts,
        draws,
        num_draws: if horizon > 1 || return_draws { num_draws } else { 0 },
        dropped_draws: dropped,
        seed,
    })
}

/// inf{x : F̂(x) ≥ p} for the empirical distribution of `xs`.
pub fn empirical_quantile(xs: &[f64], p: f64) -> Result<f64> {
    if xs.is_empty() {
        return Err(GasError::EmptyInput);
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(GasError::InvalidArgument(format!("probability {p} outside (0, 1)")));
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = (p * sorted.len() as f64).ceil() as usize;
    Ok(sorted[k.max(1) - 1])
}

impl ForecastResult {
    /// Per-horizon p-quantiles of a univariate predictive distribution:
    /// exact at h = 1, empirical over the retained draws beyond.
    pub fn quantiles(&self, p: f64) -> Result<Vec<f64>> {
        if self.dist.is_multivariate() {
            return Err(GasError::MultivariateUnsupported);
        }
        let mut out = vec![self.dist.quantile(&self.param_forecasts[0], p)?];
        if self.horizon > 1 {
            let draws = self.draws.as_ref().ok_or(GasError::DrawsUnavailable)?;
            for row in &draws[1..] {
                let xs: Vec<f64> = row.iter().map(|d| d[0]).collect();
                out.push(empirical_quantile(&xs, p)?);
            }
        }
        Ok(out)
    }

    pub fn means(&self) -> Vec<Vec<f64>> {
        self.moment_forecasts.iter().map(|m| m.mean.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefitWindow {
    /// All observations up to the forecast origin.
    Recursive,
    /// A window of fixed length ending at the forecast origin.
    Moving,
}

impl std::str::FromStr for RefitWindow {
    type Err = GasError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "recursive" => Ok(RefitWindow::Recursive),
            "moving" => Ok(RefitWindow::Moving),
            _ => Err(GasError::InvalidArgument(format!("unknown refit window `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefitSummary {
    /// Absolute index of the first observation predicted with these coefficients.
    pub index: usize,
    pub window_start: usize,
    pub window_end: usize,
    pub coeffs: Coefficients,
    pub loglik: Option<f64>,
    pub converged: bool,
    pub reused_previous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollResult {
    pub spec: GasSpec,
    pub predicted_params: Vec<Vec<f64>>,
    pub realized: Vec<Vec<f64>>,
    pub log_scores: Vec<f64>,
    pub refit_indices: Vec<usize>,
    pub fits: Vec<RefitSummary>,
    pub warnings: Vec<String>,
}

/// Rolling one-step-ahead forecasts over the last `forecast_length`
/// observations, re-estimating every `refit_every` steps. After a refit the
/// filter is restarted at (I − B̂)⁻¹κ̂ and run through the estimation window;
/// between refits it keeps absorbing each new observation under the frozen
/// coefficients.
pub fn roll(
    spec: &GasSpec,
    data: &Series,
    forecast_length: usize,
    refit_every: usize,
    refit_window: RefitWindow,
    config: &OptimizerConfig,
) -> Result<RollResult> {
    roll_with(spec, data, forecast_length, refit_every, refit_window, |window| estimation::fit(spec, window, config))
}

/// [`roll`] with a caller-supplied estimator.
pub fn roll_with<F>(
    spec: &GasSpec,
    data: &Series,
    forecast_length: usize,
    refit_every: usize,
    refit_window: RefitWindow,
    mut estimate: F,
) -> Result<RollResult>
where
    F: FnMut(&Series) -> Result<FitResult>,
{
    let total = data.len();
    if forecast_length == 0 || forecast_length >= total {
        return Err(GasError::InvalidArgument(format!(
            "forecast length {forecast_length} must lie in [1, {total})"
        )));
    }
    if refit_every == 0 {
        return Err(GasError::InvalidArgument("refit interval must be at least 1".into()));
    }
    let t0 = total - forecast_length;
    let mut out = RollResult {
        spec: spec.clone(),
        predicted_params: Vec::with_capacity(forecast_length),
        realized: Vec::with_capacity(forecast_length),
        log_scores: Vec::with_capacity(forecast_length),
        refit_indices: Vec::new(),
        fits: Vec::new(),
        warnings: Vec::new(),
    };
    let mut coeffs: Option<Coefficients> = None;
    let mut tilde = Vec::new();
    let mut scorer = Scorer::new(spec);
    for i in 0..forecast_length {
        let origin = t0 + i;
        if i % refit_every == 0 {
            let start = match refit_window {
                RefitWindow::Recursive => 0,
                RefitWindow::Moving => i,
            };
            let window = data.slice(start, origin);
            let (c, loglik, converged, reused) = match estimate(&window) {
                Ok(f) => {
                    if !f.converged {
                        out.warnings.push(format!("refit at {origin} did not converge"));
                    }
                    (f.coeffs, Some(f.loglik), f.converged, false)
                }
                Err(e) => match coeffs.take() {
                    Some(prev) => {
                        out.warnings.push(format!("refit at {origin} failed ({e}); previous coefficients kept"));
                        (prev, None, false, true)
                    }
                    None => return Err(e),
                },
            };
            tilde = model::filter(spec, &c, &window)?.next_tilde;
            out.refit_indices.push(origin);
            out.fits.push(RefitSummary {
                index: origin,
                window_start: start,
                window_end: origin,
                coeffs: c.clone(),
                loglik,
                converged,
                reused_previous: reused,
            });
            coeffs = Some(c);
        }
        let c = coeffs.as_ref().expect("fitted at i = 0");
        let y = data.row(origin);
        let ll = scorer.eval(y, &tilde).map_err(|e| model::support_at(e, spec, origin))?;
        out.predicted_params.push(scorer.theta().to_vec());
        out.realized.push(y.to_vec());
        out.log_scores.push(ll);
        model::update(c, &scorer.s, &mut tilde, origin)?;
    }
    Ok(out)
}

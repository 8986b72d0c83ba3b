//! Density-forecast evaluation: negative log score, weighted CRPS,
//! Diebold-Mariano comparisons and cumulative log-score differences.
//!
//! The weighted CRPS integral is approximated with the midpoint rule on a
//! fixed grid, comparing the predictive cdf with the strict indicator
//! 1{y < z}.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GasError, Result};
use crate::estimation::two_sided_p;
use crate::forecasting::RollResult;
use crate::special::{norm_cdf, norm_pdf};

/// Tolerated decrease between neighbouring cdf evaluations.
pub const MONOTONE_TOLERANCE: f64 = 1e-10;
/// Default number of integration cells.
pub const DEFAULT_CELLS: usize = 1000;
/// Smallest sample accepted by the Diebold-Mariano test.
pub const DM_MIN_LENGTH: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightProfile {
    Uniform,
    Center,
    Tails,
    TailR,
    TailL,
}

impl WeightProfile {
    pub const ALL: [WeightProfile; 5] =
        [WeightProfile::Uniform, WeightProfile::Center, WeightProfile::Tails, WeightProfile::TailR, WeightProfile::TailL];

    pub fn label(self) -> &'static str {
        match self {
            WeightProfile::Uniform => "uniform",
            WeightProfile::Center => "center",
            WeightProfile::Tails => "tails",
            WeightProfile::TailR => "tail_r",
            WeightProfile::TailL => "tail_l",
        }
    }
}

impl std::str::FromStr for WeightProfile {
    type Err = GasError;

    fn from_str(s: &str) -> Result<Self> {
        WeightProfile::ALL
            .into_iter()
            .find(|p| p.label() == s)
            .ok_or_else(|| GasError::InvalidArgument(format!("unknown weight profile `{s}`")))
    }
}

/// A weight profile together with the Gaussian location `a` and scale `b`
/// that shape every profile except `uniform`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub profile: WeightProfile,
    pub a: f64,
    pub b: f64,
}

impl WeightSpec {
    pub fn new(profile: WeightProfile, a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !(b > 0.0 && b.is_finite()) {
            return Err(GasError::InvalidArgument(format!("weight parameters a={a}, b={b} (need b > 0)")));
        }
        Ok(WeightSpec { profile, a, b })
    }

    pub fn standard(profile: WeightProfile) -> Self {
        WeightSpec { profile, a: 0.0, b: 1.0 }
    }

    pub fn weight(&self, z: f64) -> f64 {
        let pdf = |x: f64| norm_pdf((x - self.a) / self.b) / self.b;
        match self.profile {
            WeightProfile::Uniform => 1.0,
            WeightProfile::Center => pdf(z),
            WeightProfile::Tails => 1.0 - pdf(z) / pdf(0.0),
            WeightProfile::TailR => norm_cdf((z - self.a) / self.b),
            WeightProfile::TailL => 1.0 - norm_cdf((z - self.a) / self.b),
        }
    }
}

/// Midpoint integration grid on [lower, upper] with `cells` cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lower: f64,
    pub upper: f64,
    pub cells: usize,
}

impl Grid {
    pub fn new(lower: f64, upper: f64, cells: usize) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(GasError::InvalidGrid(format!("need finite lower < upper, got [{lower}, {upper}]")));
        }
        if cells < 2 {
            return Err(GasError::InvalidGrid(format!("need at least 2 cells, got {cells}")));
        }
        Ok(Grid { lower, upper, cells })
    }

    pub fn step(&self) -> f64 {
        (self.upper - self.lower) / self.cells as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let d = self.step();
        (0..self.cells).map(|j| self.lower + (j as f64 + 0.5) * d).collect()
    }
}

/// Negative of the mean log score.
pub fn nls(log_scores: &[f64]) -> Result<f64> {
    if log_scores.is_empty() {
        return Err(GasError::EmptyInput);
    }
    if let Some(bad) = log_scores.iter().find(|v| !v.is_finite()) {
        return Err(GasError::InvalidArgument(format!("non-finite log score {bad}")));
    }
    Ok(-log_scores.iter().sum::<f64>() / log_scores.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WcrpsResult {
    pub per_time: Vec<f64>,
    pub average: f64,
}

/// Samples the cdf of forecast `t` on the grid, checking monotonicity.
fn sampled_cdf<F>(cdf: &F, t: usize, points: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(usize, f64) -> Result<f64>,
{
    let mut out = Vec::with_capacity(points.len());
    for (j, &z) in points.iter().enumerate() {
        let f = cdf(t, z)?;
        if !f.is_finite() {
            return Err(GasError::InvalidArgument(format!("non-finite cdf value at t={t}, z={z}")));
        }
        if j > 0 && f < out[j - 1] - MONOTONE_TOLERANCE {
            return Err(GasError::NonMonotoneCdf { t, z });
        }
        out.push(f);
    }
    Ok(out)
}

fn weighted_sum(cdf_values: &[f64], points: &[f64], weights: &[f64], y: f64, step: f64) -> f64 {
    let mut acc = 0.0;
    for ((f, z), w) in cdf_values.iter().zip(points).zip(weights) {
        let indicator = if y < *z { 1.0 } else { 0.0 };
        acc += w * (f - indicator).powi(2);
    }
    step * acc
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Weighted CRPS of each forecast `cdf(t, ·)` against realization `y[t]`.
pub fn wcrps<F>(cdf: F, y: &[f64], weight: &WeightSpec, grid: &Grid) -> Result<WcrpsResult>
where
    F: Fn(usize, f64) -> Result<f64> + Sync,
{
    let all = wcrps_profiles(cdf, y, &[*weight], grid)?;
    let per_time = all.into_iter().next().expect("one profile requested");
    Ok(WcrpsResult { average: mean(&per_time), per_time })
}

/// Per-time weighted CRPS for several weight specifications at once,
/// sampling each predictive cdf a single time. Returns one vector per
/// weight specification.
pub fn wcrps_profiles<F>(cdf: F, y: &[f64], weights: &[WeightSpec], grid: &Grid) -> Result<Vec<Vec<f64>>>
where
    F: Fn(usize, f64) -> Result<f64> + Sync,
{
    let grid = Grid::new(grid.lower, grid.upper, grid.cells)?;
    if y.is_empty() {
        return Err(GasError::EmptyInput);
    }
    let points = grid.points();
    let step = grid.step();
    let w: Vec<Vec<f64>> = weights.iter().map(|ws| points.iter().map(|&z| ws.weight(z)).collect()).collect();
    let rows: Vec<Vec<f64>> = y
        .par_iter()
        .enumerate()
        .map(|(t, &yt)| {
            let f = sampled_cdf(&cdf, t, &points)?;
            Ok(w.iter().map(|wk| weighted_sum(&f, &points, wk, yt, step)).collect())
        })
        .collect::<Result<_>>()?;
    Ok((0..weights.len()).map(|k| rows.iter().map(|r| r[k]).collect()).collect())
}

/// One value per weight profile, serialized in the canonical profile order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerProfile<T> {
    pub uniform: T,
    pub center: T,
    pub tails: T,
    pub tail_r: T,
    pub tail_l: T,
}

impl<T> PerProfile<T> {
    pub fn get(&self, profile: WeightProfile) -> &T {
        match profile {
            WeightProfile::Uniform => &self.uniform,
            WeightProfile::Center => &self.center,
            WeightProfile::Tails => &self.tails,
            WeightProfile::TailR => &self.tail_r,
            WeightProfile::TailL => &self.tail_l,
        }
    }

    fn from_vec(mut v: Vec<T>) -> Self {
        assert_eq!(v.len(), 5);
        let tail_l = v.pop().unwrap();
        let tail_r = v.pop().unwrap();
        let tails = v.pop().unwrap();
        let center = v.pop().unwrap();
        let uniform = v.pop().unwrap();
        PerProfile { uniform, center, tails, tail_r, tail_l }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityBacktestResult {
    pub average_nls: f64,
    pub average_wcrps: PerProfile<f64>,
    pub per_time_nls: Vec<f64>,
    pub per_time_wcrps: PerProfile<Vec<f64>>,
    pub grid: Grid,
    pub a: f64,
    pub b: f64,
}

/// Scores the one-step-ahead predictive densities of a rolling backtest.
pub fn backtest_density(roll: &RollResult, grid: &Grid, a: f64, b: f64) -> Result<DensityBacktestResult> {
    let dist = roll.spec.dist;
    if dist.is_multivariate() {
        return Err(GasError::MultivariateUnsupported);
    }
    WeightSpec::new(WeightProfile::Uniform, a, b)?;
    let average_nls = nls(&roll.log_scores)?;
    let y: Vec<f64> = roll.realized.iter().map(|r| r[0]).collect();
    let weights: Vec<WeightSpec> = WeightProfile::ALL.iter().map(|&p| WeightSpec { profile: p, a, b }).collect();
    let per_time = wcrps_profiles(|t, z| dist.cdf(&roll.predicted_params[t], z), &y, &weights, grid)?;
    let averages = per_time.iter().map(|v| mean(v)).collect();
    Ok(DensityBacktestResult {
        average_nls,
        average_wcrps: PerProfile::from_vec(averages),
        per_time_nls: roll.log_scores.iter().map(|v| -v).collect(),
        per_time_wcrps: PerProfile::from_vec(per_time),
        grid: *grid,
        a,
        b,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmResult {
    pub statistic: f64,
    pub p_value: f64,
    pub mean_differential: f64,
    pub hac_variance: f64,
    pub bandwidth: usize,
}

/// floor(n^{1/3}) computed exactly in integers.
pub fn cube_root_floor(n: usize) -> usize {
    let mut l = (n as f64).cbrt().floor() as usize;
    while (l + 1).pow(3) <= n {
        l += 1;
    }
    while l.pow(3) > n {
        l -= 1;
    }
    l
}

/// Diebold-Mariano test on the loss differential `a − b`, with a
/// Newey-West variance (Bartlett kernel, bandwidth floor(H^{1/3})).
pub fn dm_test(scores_a: &[f64], scores_b: &[f64]) -> Result<DmResult> {
    if scores_a.len() != scores_b.len() {
        return Err(GasError::LengthMismatch(scores_a.len(), scores_b.len()));
    }
    let h = scores_a.len();
    if h < DM_MIN_LENGTH {
        return Err(GasError::InsufficientData { needed: DM_MIN_LENGTH, got: h });
    }
    let d: Vec<f64> = scores_a.iter().zip(scores_b).map(|(x, y)| x - y).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(GasError::InvalidArgument("non-finite score".into()));
    }
    let d_bar = mean(&d);
    let centered: Vec<f64> = d.iter().map(|v| v - d_bar).collect();
    let autocov = |lag: usize| -> f64 {
        centered[lag..].iter().zip(&centered[..h - lag]).map(|(x, y)| x * y).sum::<f64>() / h as f64
    };
    let bandwidth = cube_root_floor(h);
    let mut variance = autocov(0);
    for lag in 1..=bandwidth {
        variance += 2.0 * (1.0 - lag as f64 / (bandwidth + 1) as f64) * autocov(lag);
    }
    if !(variance > 0.0) || d.iter().all(|v| *v == 0.0) {
        return Err(GasError::ZeroVarianceDifferential);
    }
    let statistic = d_bar / (variance / h as f64).sqrt();
    Ok(DmResult { statistic, p_value: two_sided_p(statistic), mean_differential: d_bar, hac_variance: variance, bandwidth })
}

/// Running sums of log p_A − log p_B.
pub fn cls_series(log_scores_a: &[f64], log_scores_b: &[f64]) -> Result<Vec<f64>> {
    if log_scores_a.len() != log_scores_b.len() {
        return Err(GasError::LengthMismatch(log_scores_a.len(), log_scores_b.len()));
    }
    let mut acc = 0.0;
    Ok(log_scores_a
        .iter()
        .zip(log_scores_b)
        .map(|(x, y)| {
            acc += x - y;
            acc
        })
        .collect())
}

//! One function per subcommand. Each returns the JSON document to emit.

use std::path::Path;

use gas_core::distributions::{DistInfo, Role};
use gas_core::estimation::{fit, Estimate, FitResult};
use gas_core::forecasting::{forecast_from, roll, ForecastResult, RefitWindow, RollResult};
use gas_core::model::{simulate, target_kappa, Coefficients, GasSpec};
use gas_core::scoring::{backtest_density, dm_test, DensityBacktestResult, DmResult, Grid};
use serde::{Deserialize, Serialize};

use crate::config::{Settings, DEFAULT_CELLS, DEFAULT_DRAWS, DEFAULT_HORIZON};
use crate::data::{read_scores, read_table, write_simulation};
use crate::error::{CliError, CliResult};

pub fn info(settings: &Settings) -> CliResult<DistInfo> {
    Ok(settings.distribution(None)?.info())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub spec: GasSpec,
    pub param_names: Vec<String>,
    pub coefficients: Coefficients,
    pub estimates: Vec<Estimate>,
    pub unconditional_params: Vec<f64>,
    /// Filtered state for the first out-of-sample period.
    pub next_state: Vec<f64>,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub np: usize,
    pub num_obs: usize,
    pub converged: bool,
    pub iterations: usize,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_seconds: Option<f64>,
}

impl FitReport {
    pub fn new(r: FitResult, timing: bool) -> FitReport {
        FitReport {
            param_names: r.spec.dist.param_names(),
            spec: r.spec,
            coefficients: r.coeffs,
            estimates: r.estimates,
            unconditional_params: r.unconditional_params,
            next_state: r.filter_output.next_tilde,
            loglik: r.loglik,
            aic: r.aic,
            bic: r.bic,
            np: r.num_params,
            num_obs: r.num_obs,
            converged: r.converged,
            iterations: r.iterations,
            warnings: r.warnings,
            elapsed_seconds: timing.then_some(r.elapsed_seconds),
        }
    }
}

pub fn fit_cmd(settings: &Settings, series: &Path, timing: bool) -> CliResult<FitReport> {
    let table = read_table(series)?;
    let multivariate = settings.dist.is_some_and(|d| d.is_multivariate());
    let y = table.select(settings.column.as_deref(), multivariate)?;
    let spec = settings.spec(Some(y.dim()))?;
    let result = fit(&spec, &y, &settings.optimizer()?)?;
    Ok(FitReport::new(result, timing))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSidecar {
    pub spec: GasSpec,
    pub param_names: Vec<String>,
    pub coefficients: Coefficients,
    pub unconditional_params: Vec<f64>,
    pub length: usize,
    pub seed: u64,
    pub data_file: String,
}

/// Sidecar path next to a simulated CSV: `sim.csv` → `sim.json`.
pub fn sidecar_path(out: &Path) -> CliResult<std::path::PathBuf> {
    if out.extension().is_some_and(|e| e == "json") {
        return Err(CliError::input("simulate writes CSV; choose an output name not ending in .json"));
    }
    Ok(out.with_extension("json"))
}

pub fn simulate_cmd(settings: &Settings, out: &Path) -> CliResult<SimulationSidecar> {
    let mut settings = settings.clone();
    let dist = settings.distribution(None)?;
    let j = dist.num_params();
    let a = settings.a_diag.clone().unwrap_or_else(|| vec![0.0; j]);
    let b = settings.b_diag.clone().unwrap_or_else(|| vec![0.0; j]);
    for (name, v) in [("a_diag", &a), ("b_diag", &b)] {
        if v.len() != j {
            return Err(CliError::input(format!("{name} needs {j} values, got {}", v.len())));
        }
    }
    if settings.gas_par.is_empty() {
        let roles: Vec<Role> = dist.roles();
        settings.gas_par =
            (0..j).filter(|&i| a[i] != 0.0 || b[i] != 0.0).map(|i| (roles[i], true)).collect();
    }
    let spec = settings.spec(None)?;
    let kappa = match (&settings.kappa, &settings.theta_star) {
        (Some(_), Some(_)) => return Err(CliError::input("give either kappa or theta_star, not both")),
        (Some(k), None) => k.clone(),
        (None, Some(theta)) => target_kappa(&spec, &b, theta)?,
        (None, None) => return Err(CliError::input("simulate needs kappa or theta_star")),
    };
    let coeffs = Coefficients::new(kappa, a, b);
    let length = Settings::require(&settings.length, "length")?;
    let seed = settings.seed.unwrap_or(0);
    let sim = simulate(&spec, &coeffs, length, seed)?;
    let sidecar = sidecar_path(out)?;
    write_simulation(out, &spec, &sim)?;
    let report = SimulationSidecar {
        param_names: spec.dist.param_names(),
        unconditional_params: coeffs.unconditional_params(&spec)?,
        spec,
        coefficients: coeffs,
        length,
        seed,
        data_file: out.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
    };
    write_json(&sidecar, &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileForecast {
    pub probability: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastReport {
    pub param_names: Vec<String>,
    #[serde(flatten)]
    pub forecast: ForecastResult,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub quantiles: Vec<QuantileForecast>,
}

pub fn forecast_cmd(settings: &Settings, fit_file: Option<&Path>, series: Option<&Path>) -> CliResult<ForecastReport> {
    let report: FitReport = match (fit_file, series) {
        (Some(f), None) => read_json(f)?,
        (None, Some(s)) => fit_cmd(settings, s, false)?,
        _ => return Err(CliError::input("forecast needs exactly one of --fit <file> or a series file")),
    };
    let horizon = settings.horizon.unwrap_or(DEFAULT_HORIZON);
    let draws = settings.num_draws.unwrap_or(DEFAULT_DRAWS);
    let return_draws = settings.return_draws.unwrap_or(false);
    let probabilities = settings.quantiles.clone().unwrap_or_default();
    // quantiles beyond one step are read off the draws
    let keep = return_draws || (horizon > 1 && !probabilities.is_empty());
    let mut f = forecast_from(
        &report.spec,
        &report.coefficients,
        &report.next_state,
        horizon,
        draws,
        keep,
        settings.seed.unwrap_or(0),
    )?;
    let quantiles = probabilities
        .iter()
        .map(|&p| Ok(QuantileForecast { probability: p, values: f.quantiles(p)? }))
        .collect::<CliResult<Vec<_>>>()?;
    if !return_draws {
        f.draws = None;
    }
    Ok(ForecastReport { param_names: report.spec.dist.param_names(), forecast: f, quantiles })
}

pub fn roll_cmd(settings: &Settings, series: &Path) -> CliResult<RollResult> {
    let table = read_table(series)?;
    let multivariate = settings.dist.is_some_and(|d| d.is_multivariate());
    let y = table.select(settings.column.as_deref(), multivariate)?;
    let spec = settings.spec(Some(y.dim()))?;
    let length = Settings::require(&settings.forecast_length, "forecast_length")?;
    let every = Settings::require(&settings.refit_every, "refit_every")?;
    let window = settings.refit_window.unwrap_or(RefitWindow::Recursive);
    Ok(roll(&spec, &y, length, every, window, &settings.optimizer()?)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestSummary {
    #[serde(rename = "LS")]
    pub ls: f64,
    pub uniform: f64,
    pub center: f64,
    pub tails: f64,
    pub tail_r: f64,
    pub tail_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub summary: BacktestSummary,
    pub details: DensityBacktestResult,
}

pub fn backtest_cmd(settings: &Settings, roll_file: &Path) -> CliResult<BacktestReport> {
    let rolled: RollResult = read_json(roll_file)?;
    let lower = Settings::require(&settings.lower, "lower")?;
    let upper = Settings::require(&settings.upper, "upper")?;
    let grid = Grid::new(lower, upper, settings.cells.unwrap_or(DEFAULT_CELLS))?;
    let bt = backtest_density(&rolled, &grid, settings.weight_a.unwrap_or(0.0), settings.weight_b.unwrap_or(1.0))?;
    let w = &bt.average_wcrps;
    let summary = BacktestSummary {
        ls: bt.average_nls,
        uniform: w.uniform,
        center: w.center,
        tails: w.tails,
        tail_r: w.tail_r,
        tail_l: w.tail_l,
    };
    Ok(BacktestReport { summary, details: bt })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmReport {
    pub num_obs: usize,
    #[serde(flatten)]
    pub result: DmResult,
}

pub fn dm_cmd(settings: &Settings, a: &Path, b: &Path) -> CliResult<DmReport> {
    let name = settings.column.as_ref().map(|c| c.join(","));
    let sa = read_scores(a, name.as_deref())?;
    let sb = read_scores(b, name.as_deref())?;
    let result = dm_test(&sa, &sb)?;
    Ok(DmReport { num_obs: sa.len(), result })
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::file(path, e))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("outputs serialize");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    std::fs::write(path, to_json(value)).map_err(|e| CliError::file(path, e))
}

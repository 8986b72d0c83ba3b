//! Run configuration: `key = value` files overlaid by command-line flags.
//!
//! Both sources go through [`Settings::set`], so a value is parsed the same
//! way wherever it comes from. Lines starting with `#` are comments.

use std::path::Path;
use std::str::FromStr;

use gas_core::distributions::{Distribution, DistributionId, Role, Scaling};
use gas_core::estimation::OptimizerConfig;
use gas_core::forecasting::RefitWindow;
use gas_core::model::{GasPar, GasSpec};

use crate::error::{CliError, CliResult};

pub const DEFAULT_HORIZON: usize = 1;
pub const DEFAULT_DRAWS: usize = 10_000;
pub const DEFAULT_CELLS: usize = 1000;

pub const KEYS: &[&str] = &[
    "dist",
    "dim",
    "scaling_type",
    "gas_par",
    "scalar_parameters",
    "column",
    "horizon",
    "num_draws",
    "return_draws",
    "quantiles",
    "forecast_length",
    "refit_every",
    "refit_window",
    "lower",
    "upper",
    "K",
    "a",
    "b",
    "seed",
    "length",
    "theta_star",
    "kappa",
    "a_diag",
    "b_diag",
    "max_iterations",
    "gradient_tolerance",
    "step_tolerance",
    "grid_a",
    "grid_b",
];

#[derive(Debug, Clone, Default)]
pub struct Settings {
    pub dist: Option<DistributionId>,
    pub dim: Option<usize>,
    pub scaling: Option<Scaling>,
    pub gas_par: Vec<(Role, bool)>,
    pub scalar_parameters: Option<bool>,
    pub column: Option<Vec<String>>,
    pub horizon: Option<usize>,
    pub num_draws: Option<usize>,
    pub return_draws: Option<bool>,
    pub quantiles: Option<Vec<f64>>,
    pub forecast_length: Option<usize>,
    pub refit_every: Option<usize>,
    pub refit_window: Option<RefitWindow>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub cells: Option<usize>,
    pub weight_a: Option<f64>,
    pub weight_b: Option<f64>,
    pub seed: Option<u64>,
    pub length: Option<usize>,
    pub theta_star: Option<Vec<f64>>,
    pub kappa: Option<Vec<f64>>,
    pub a_diag: Option<Vec<f64>>,
    pub b_diag: Option<Vec<f64>>,
    pub max_iterations: Option<usize>,
    pub gradient_tolerance: Option<f64>,
    pub step_tolerance: Option<f64>,
    pub grid_a: Option<Vec<f64>>,
    pub grid_b: Option<Vec<f64>>,
}

fn parse<T: FromStr>(key: &str, value: &str) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse::<T>().map_err(|e| CliError::input(format!("{key}: cannot parse `{value}`: {e}")))
}

fn parse_bool(key: &str, value: &str) -> CliResult<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::input(format!("{key}: expected true or false, got `{value}`"))),
    }
}

fn parse_finite(key: &str, value: &str) -> CliResult<f64> {
    let v: f64 = parse(key, value)?;
    if !v.is_finite() {
        return Err(CliError::input(format!("{key}: `{value}` is not a finite number")));
    }
    Ok(v)
}

fn parse_list(key: &str, value: &str) -> CliResult<Vec<f64>> {
    value.split(',').map(|v| parse_finite(key, v)).collect()
}

fn parse_gas_par(value: &str) -> CliResult<Vec<(Role, bool)>> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| CliError::input(format!("gas_par: expected role=bool, got `{item}`")))?;
            let role: Role = parse("gas_par", k)?;
            Ok((role, parse_bool("gas_par", v)?))
        })
        .collect()
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        match key {
            "dist" => self.dist = Some(value.trim().parse::<DistributionId>()?),
            "dim" => self.dim = Some(parse(key, value)?),
            "scaling_type" => self.scaling = Some(parse(key, value)?),
            "gas_par" => self.gas_par.extend(parse_gas_par(value)?),
            "scalar_parameters" => self.scalar_parameters = Some(parse_bool(key, value)?),
            "column" => self.column = Some(value.split(',').map(|s| s.trim().to_string()).collect()),
            "horizon" => self.horizon = Some(parse(key, value)?),
            "num_draws" => self.num_draws = Some(parse(key, value)?),
            "return_draws" => self.return_draws = Some(parse_bool(key, value)?),
            "quantiles" => self.quantiles = Some(parse_list(key, value)?),
            "forecast_length" => self.forecast_length = Some(parse(key, value)?),
            "refit_every" => self.refit_every = Some(parse(key, value)?),
            "refit_window" => self.refit_window = Some(parse(key, value)?),
            "lower" => self.lower = Some(parse_finite(key, value)?),
            "upper" => self.upper = Some(parse_finite(key, value)?),
            "K" => self.cells = Some(parse(key, value)?),
            "a" => self.weight_a = Some(parse_finite(key, value)?),
            "b" => self.weight_b = Some(parse_finite(key, value)?),
            "seed" => self.seed = Some(parse(key, value)?),
            "length" => self.length = Some(parse(key, value)?),
            "theta_star" => self.theta_star = Some(parse_list(key, value)?),
            "kappa" => self.kappa = Some(parse_list(key, value)?),
            "a_diag" => self.a_diag = Some(parse_list(key, value)?),
            "b_diag" => self.b_diag = Some(parse_list(key, value)?),
            "max_iterations" => self.max_iterations = Some(parse(key, value)?),
            "gradient_tolerance" => self.gradient_tolerance = Some(parse_finite(key, value)?),
            "step_tolerance" => self.step_tolerance = Some(parse_finite(key, value)?),
            "grid_a" => self.grid_a = Some(parse_list(key, value)?),
            "grid_b" => self.grid_b = Some(parse_list(key, value)?),
            _ => return Err(CliError::input(format!("unknown configuration key `{key}` (known: {})", KEYS.join(", ")))),
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> CliResult<Settings> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
        let mut settings = Settings::default();
        let mut seen = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::file(path, format!("line {}: expected key = value", n + 1)))?;
            let key = key.trim();
            if seen.contains(&key) {
                return Err(CliError::file(path, format!("line {}: duplicate key `{key}`", n + 1)));
            }
            seen.push(key);
            settings.set(key, value.trim()).map_err(|e| CliError::file(path, format!("line {}: {e}", n + 1)))?;
        }
        Ok(settings)
    }

    /// Values present in `over` replace those in `self`.
    pub fn overlay(mut self, over: Settings) -> Settings {
        macro_rules! take {
            ($($f:ident),*) => { $( if over.$f.is_some() { self.$f = over.$f; } )* };
        }
        take!(
            dist, dim, scaling, scalar_parameters, column, horizon, num_draws, return_draws, quantiles,
            forecast_length, refit_every, refit_window, lower, upper, cells, weight_a, weight_b, seed, length,
            theta_star, kappa, a_diag, b_diag, max_iterations, gradient_tolerance, step_tolerance, grid_a, grid_b
        );
        self.gas_par.extend(over.gas_par);
        self
    }

    pub fn require<T: Clone>(value: &Option<T>, key: &str) -> CliResult<T> {
        value.clone().ok_or_else(|| CliError::input(format!("missing required setting `{key}`")))
    }

    pub fn distribution(&self, data_dim: Option<usize>) -> CliResult<Distribution> {
        let id = Self::require(&self.dist, "dist")?;
        let dim = match (self.dim, data_dim) {
            (Some(d), _) => d,
            (None, Some(d)) if id.is_multivariate() => d,
            (None, _) if id.is_multivariate() => {
                return Err(CliError::input("multivariate distributions need `dim`"));
            }
            _ => 1,
        };
        Ok(Distribution::new(id, dim)?)
    }

    pub fn spec(&self, data_dim: Option<usize>) -> CliResult<GasSpec> {
        let dist = self.distribution(data_dim)?;
        let mut par = GasPar::default_for(&dist);
        for &(role, on) in &self.gas_par {
            par.set(role, on);
        }
        Ok(GasSpec::new(
            dist,
            self.scaling.unwrap_or(Scaling::Identity),
            par,
            self.scalar_parameters.unwrap_or(false),
        )?)
    }

    pub fn optimizer(&self) -> CliResult<OptimizerConfig> {
        let mut c = OptimizerConfig::default();
        if let Some(v) = self.max_iterations {
            c.max_iterations = v;
        }
        if let Some(v) = self.gradient_tolerance {
            c.gradient_tolerance = v;
        }
        if let Some(v) = self.step_tolerance {
            c.step_tolerance = v;
        }
        if let Some(v) = &self.grid_a {
            c.grid_a = v.clone();
        }
        if let Some(v) = &self.grid_b {
            c.grid_b = v.clone();
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_key_is_accepted() {
        let samples = [
            ("dist", "std"),
            ("dim", "2"),
            ("scaling_type", "InvSqrt"),
            ("gas_par", "location=true,shape=false"),
            ("scalar_parameters", "false"),
            ("column", "y"),
            ("horizon", "3"),
            ("num_draws", "100"),
            ("return_draws", "true"),
            ("quantiles", "0.01,0.5"),
            ("forecast_length", "10"),
            ("refit_every", "5"),
            ("refit_window", "moving"),
            ("lower", "-1"),
            ("upper", "1"),
            ("K", "500"),
            ("a", "0"),
            ("b", "1"),
            ("seed", "7"),
            ("length", "100"),
            ("theta_star", "0.1,1.5,7"),
            ("kappa", "0,0,0"),
            ("a_diag", "0.1,0.4,0"),
            ("b_diag", "0.9,0.95,0"),
            ("max_iterations", "10"),
            ("gradient_tolerance", "1e-5"),
            ("step_tolerance", "1e-9"),
            ("grid_a", "0.1"),
            ("grid_b", "0.9"),
        ];
        assert_eq!(samples.len(), KEYS.len());
        let mut s = Settings::default();
        for (k, v) in samples {
            assert!(KEYS.contains(&k));
            s.set(k, v).unwrap();
        }
        assert_eq!(s.gas_par, vec![(Role::Location, true), (Role::Shape, false)]);
        assert!(s.set("nope", "1").is_err());
        assert!(s.set("lower", "nan").is_err());
        assert!(s.set("return_draws", "maybe").is_err());
    }

    #[test]
    fn command_line_wins() {
        let mut file = Settings::default();
        file.set("horizon", "4").unwrap();
        file.set("seed", "1").unwrap();
        let mut cli = Settings::default();
        cli.set("seed", "9").unwrap();
        let merged = file.overlay(cli);
        assert_eq!(merged.horizon, Some(4));
        assert_eq!(merged.seed, Some(9));
    }

    #[test]
    fn spec_from_settings() {
        let mut s = Settings::default();
        s.set("dist", "std").unwrap();
        s.set("gas_par", "location=true").unwrap();
        let spec = s.spec(Some(1)).unwrap();
        assert!(spec.gas_par.location && spec.gas_par.scale && !spec.gas_par.shape);
        s.set("dist", "mvnorm").unwrap();
        s.gas_par.clear();
        assert_eq!(s.spec(Some(3)).unwrap().dist.dim, 3);
        s.set("dist", "foo").unwrap_err();
    }

    proptest::proptest! {
        #[test]
        fn unknown_keys_are_rejected(key in "[a-zA-Z_]{1,16}") {
            proptest::prop_assume!(!KEYS.contains(&key.as_str()));
            proptest::prop_assert!(Settings::default().set(&key, "1").is_err());
        }

        #[test]
        fn flags_override_file_values(from_file in 1usize..1000, from_flag in proptest::option::of(1usize..1000)) {
            let mut file = Settings::default();
            file.set("horizon", &from_file.to_string()).unwrap();
            let mut flags = Settings::default();
            if let Some(h) = from_flag {
                flags.set("horizon", &h.to_string()).unwrap();
            }
            proptest::prop_assert_eq!(file.overlay(flags).horizon, Some(from_flag.unwrap_or(from_file)));
        }
    }
}

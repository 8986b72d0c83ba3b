//! `gas`: fit, simulate, forecast and backtest score-driven models from CSV
//! data, writing JSON reports.

mod commands;
mod config;
mod data;
mod error;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::Settings;
use error::{CliError, CliResult, EXIT_INPUT};

#[derive(Debug, Parser)]
#[command(name = "gas", version, about = "Generalized autoregressive score models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Describe a conditional distribution.
    Info {
        #[command(flatten)]
        opts: Options,
    },
    /// Estimate a model on a CSV series.
    Fit {
        series: PathBuf,
        #[command(flatten)]
        opts: Options,
    },
    /// Simulate a series to CSV, with a JSON sidecar describing the model.
    Simulate {
        #[command(flatten)]
        opts: Options,
    },
    /// Forecast from a saved fit or from a series that is fitted first.
    Forecast {
        series: Option<PathBuf>,
        /// Fit report written by `gas fit`.
        #[arg(long)]
        fit: Option<PathBuf>,
        #[command(flatten)]
        opts: Options,
    },
    /// Rolling one-step-ahead density forecasts.
    Roll {
        series: PathBuf,
        #[command(flatten)]
        opts: Options,
    },
    /// Score a roll report with NLS and weighted CRPS.
    Backtest {
        roll: PathBuf,
        #[command(flatten)]
        opts: Options,
    },
    /// Diebold-Mariano test on two per-period loss files.
    Dm {
        scores_a: PathBuf,
        scores_b: PathBuf,
        #[command(flatten)]
        opts: Options,
    },
}

/// Every setting is accepted by every subcommand and ignored where it has
/// no meaning, matching the behaviour of configuration files.
#[derive(Debug, Args)]
struct Options {
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    /// Identity, Inv or InvSqrt.
    #[arg(long)]
    scaling: Option<String>,
    /// role=bool pairs, e.g. location=true,shape=false.
    #[arg(long)]
    gas_par: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    scalar_parameters: Option<String>,
    /// Column name(s) to read, comma separated.
    #[arg(long)]
    column: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long)]
    draws: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    return_draws: Option<String>,
    /// Probabilities for predictive quantiles, comma separated.
    #[arg(long)]
    quantiles: Option<String>,
    #[arg(long)]
    forecast_length: Option<String>,
    #[arg(long)]
    refit_every: Option<String>,
    /// recursive or moving.
    #[arg(long)]
    refit_window: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lower: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    upper: Option<String>,
    #[arg(long)]
    grid_k: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    weight_a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    weight_b: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Number of simulated observations.
    #[arg(long)]
    length: Option<String>,
    /// Long-run natural parameters; κ is derived from them.
    #[arg(long, allow_hyphen_values = true)]
    theta_star: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<String>,
    #[arg(long)]
    a_diag: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    b_diag: Option<String>,
    #[arg(long)]
    max_iterations: Option<String>,
    /// Output file; standard output when absent (simulate requires it).
    #[arg(long)]
    out: Option<PathBuf>,
    /// File of key = value settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Include wall-clock time in fit reports.
    #[arg(long)]
    timing: bool,
}

impl Options {
    fn settings(&self) -> CliResult<Settings> {
        let pairs = [
            ("dist", &self.dist),
            ("dim", &self.dim),
            ("scaling_type", &self.scaling),
            ("gas_par", &self.gas_par),
            ("scalar_parameters", &self.scalar_parameters),
            ("column", &self.column),
            ("horizon", &self.horizon),
            ("num_draws", &self.draws),
            ("return_draws", &self.return_draws),
            ("quantiles", &self.quantiles),
            ("forecast_length", &self.forecast_length),
            ("refit_every", &self.refit_every),
            ("refit_window", &self.refit_window),
            ("lower", &self.lower),
            ("upper", &self.upper),
            ("K", &self.grid_k),
            ("a", &self.weight_a),
            ("b", &self.weight_b),
            ("seed", &self.seed),
            ("length", &self.length),
            ("theta_star", &self.theta_star),
            ("kappa", &self.kappa),
            ("a_diag", &self.a_diag),
            ("b_diag", &self.b_diag),
            ("max_iterations", &self.max_iterations),
        ];
        let mut flags = Settings::default();
        for (key, value) in pairs {
            if let Some(v) = value {
                flags.set(key, v).map_err(|e| match e {
                    CliError::Input(m) => CliError::input(format!("--{}: {m}", flag_name(key))),
                    other => other,
                })?;
            }
        }
        Ok(match &self.config {
            Some(path) => Settings::from_file(path)?.overlay(flags),
            None => flags,
        })
    }
}

fn flag_name(key: &str) -> String {
    match key {
        "scaling_type" => "scaling".into(),
        "num_draws" => "draws".into(),
        "K" => "grid-k".into(),
        "a" => "weight-a".into(),
        "b" => "weight-b".into(),
        other => other.replace('_', "-"),
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => commands::write_json(path, value),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(commands::to_json(value).as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Info { opts } => emit(&commands::info(&opts.settings()?)?, opts.out.as_deref()),
        Command::Fit { series, opts } => {
            emit(&commands::fit_cmd(&opts.settings()?, &series, opts.timing)?, opts.out.as_deref())
        }
        Command::Simulate { opts } => {
            let out = opts.out.as_deref().ok_or_else(|| CliError::input("simulate needs --out <file.csv>"))?;
            let sidecar = commands::simulate_cmd(&opts.settings()?, out)?;
            emit(&sidecar, None)
        }
        Command::Forecast { series, fit, opts } => {
            let report = commands::forecast_cmd(&opts.settings()?, fit.as_deref(), series.as_deref())?;
            emit(&report, opts.out.as_deref())
        }
        Command::Roll { series, opts } => emit(&commands::roll_cmd(&opts.settings()?, &series)?, opts.out.as_deref()),
        Command::Backtest { roll, opts } => {
            emit(&commands::backtest_cmd(&opts.settings()?, &roll)?, opts.out.as_deref())
        }
        Command::Dm { scores_a, scores_b, opts } => {
            emit(&commands::dm_cmd(&opts.settings()?, &scores_a, &scores_b)?, opts.out.as_deref())
        }
    }
}

fn fail(err: &CliError) -> ExitCode {
    eprintln!("{}", err.to_json());
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::input(e.render().to_string().trim_end());
            eprintln!("{}", err.to_json());
            return ExitCode::from(EXIT_INPUT as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

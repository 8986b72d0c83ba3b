mod common;

use common::*;
use gas_core::distributions::{Distribution, DistributionId, Scaling};
use gas_core::estimation::OptimizerConfig;
use gas_core::forecasting::{roll, RefitWindow, RollResult};
use gas_core::model::{GasPar, GasSpec, Series};
use gas_core::scoring::{backtest_density, Grid};
use tempfile::TempDir;

fn temp() -> TempDir {
    tempfile::tempdir().unwrap()
}

#[test]
fn schemas_are_valid_documents() {
    for name in SCHEMAS {
        jsonschema::validator_for(&schema(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn info_reports_the_registry() {
    let dir = temp();
    let std = json(&ok(dir.path(), &["info", "--dist", "std"]));
    assert_valid("info", &std);
    assert_eq!(std["num_params"], 3);
    assert_eq!(std["supported_scalings"].as_array().unwrap().len(), 3);
    let mvt = json(&ok(dir.path(), &["info", "--dist", "mvt", "--dim", "3"]));
    assert_valid("info", &mvt);
    assert_eq!(mvt["num_params"], 10);
}

#[test]
fn errors_go_to_stderr_with_exit_codes() {
    let dir = temp();
    let out = gas(dir.path(), &["info", "--dist", "foo"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let err = json(&String::from_utf8(out.stderr).unwrap());
    assert_valid("error", &err);
    assert_eq!(err["error"]["kind"], "UnknownDistribution");

    for args in [
        &["info", "--dist", "mvt", "--dim", "7"][..],
        &["info", "--dist", "std", "--bogus"],
        &["fit", "missing.csv", "--dist", "norm"],
        &["simulate", "--dist", "norm", "--theta-star", "0,1", "--length", "5"],
    ] {
        let out = gas(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_valid("error", &json(&String::from_utf8(out.stderr).unwrap()));
    }

    write(dir.path(), "a.csv", "loss\n1\n2\n3\n1\n2\n3\n1\n2\n3\n1\n2\n3\n");
    let out = gas(dir.path(), &["dm", "a.csv", "a.csv"]);
    assert_eq!(out.status.code(), Some(3));
    let err = json(&String::from_utf8(out.stderr).unwrap());
    assert_eq!(err["error"]["kind"], "ZeroVarianceDifferential");
}

#[test]
fn malformed_series_files_are_rejected() {
    let dir = temp();
    for (i, contents) in [
        "0.1\n0.2\n",
        "y,z\n0.1,\n0.3,0.2\n",
        "y\n0.1\nnan\n",
        "date,y\nyesterday,0.1\n",
        "y,z\n1,2\n3\n",
    ]
    .iter()
    .enumerate()
    {
        let name = format!("bad{i}.csv");
        write(dir.path(), &name, contents);
        let out = gas(dir.path(), &["fit", &name, "--dist", "norm"]);
        assert_eq!(out.status.code(), Some(2), "{contents:?}");
    }
}

#[test]
fn simulate_writes_csv_and_sidecar() {
    let dir = temp();
    let sidecar = json(&ok(
        dir.path(),
        &[
            "simulate", "--dist", "std", "--a-diag", "0.1,0.4,0", "--b-diag", "0.9,0.95,0", "--theta-star",
            "0.1,1.5,7", "--length", "1000", "--seed", "11", "--out", "sim.csv",
        ],
    ));
    assert_valid("simulate", &sidecar);
    assert_eq!(sidecar, read_json(&dir.path().join("sim.json")));
    assert_eq!(sidecar["unconditional_params"][1].as_f64().unwrap(), 1.5);
    let csv = std::fs::read_to_string(dir.path().join("sim.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("y,location,scale,shape"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 1000);
    for row in rows {
        assert!(row.split(',').all(|c| c.parse::<f64>().unwrap().is_finite()));
    }

    ok(dir.path(), &["simulate", "--dist", "norm", "--kappa", "0,0", "--length", "1", "--out", "one.csv"]);
    let one = std::fs::read_to_string(dir.path().join("one.csv")).unwrap();
    assert_eq!(one.lines().count(), 2);

    let first = std::fs::read(dir.path().join("sim.csv")).unwrap();
    ok(
        dir.path(),
        &[
            "simulate", "--dist", "std", "--a-diag", "0.1,0.4,0", "--b-diag", "0.9,0.95,0", "--theta-star",
            "0.1,1.5,7", "--length", "1000", "--seed", "11", "--out", "again.csv",
        ],
    );
    assert_eq!(first, std::fs::read(dir.path().join("again.csv")).unwrap());
}

#[test]
fn fit_report_is_reproducible_and_complete() {
    let dir = temp();
    simulate_std(dir.path(), "sim.csv", 1500, 3);
    let args = ["fit", "sim.csv", "--dist", "std", "--seed", "5"];
    let text = ok(dir.path(), &args);
    assert_eq!(text, ok(dir.path(), &args));
    let report = json(&text);
    assert_valid("fit", &report);
    assert!(report.get("elapsed_seconds").is_none());
    assert_eq!(report["np"], 5);
    assert_eq!(report["warnings"].as_array().unwrap().len(), 0, "{report:#}");
    let names: Vec<&str> = report["estimates"].as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["kappa1", "kappa2", "kappa3", "a2", "b2"]);

    let timed = json(&ok(dir.path(), &["fit", "sim.csv", "--dist", "std", "--timing"]));
    assert_valid("fit", &timed);
    assert!(timed["elapsed_seconds"].as_f64().unwrap() >= 0.0);

    let both = json(&ok(dir.path(), &["fit", "sim.csv", "--dist", "std", "--gas-par", "location=true,shape=false"]));
    let names: Vec<&str> = both["estimates"].as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["kappa1", "kappa2", "kappa3", "a1", "a2", "b1", "b2"]);
    assert_eq!(both["np"], 7);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = temp();
    simulate_std(dir.path(), "sim.csv", 600, 4);
    write(dir.path(), "run.cfg", "# model\ndist = std\nscaling_type = InvSqrt\nhorizon = 3\nnum_draws = 200\nseed = 8\n");
    let from_file = json(&ok(dir.path(), &["forecast", "sim.csv", "--config", "run.cfg"]));
    assert_valid("forecast", &from_file);
    assert_eq!(from_file["horizon"], 3);
    assert_eq!(from_file["seed"], 8);
    let overridden = json(&ok(dir.path(), &["forecast", "sim.csv", "--config", "run.cfg", "--horizon", "2"]));
    assert_eq!(overridden["horizon"], 2);

    write(dir.path(), "bad.cfg", "dist = std\nwindow = 4\n");
    assert_eq!(gas(dir.path(), &["fit", "sim.csv", "--config", "bad.cfg"]).status.code(), Some(2));
}

#[test]
fn forecast_from_saved_fit_matches_refit() {
    let dir = temp();
    simulate_std(dir.path(), "sim.csv", 800, 6);
    ok(dir.path(), &["fit", "sim.csv", "--dist", "std", "--out", "fit.json"]);
    let flags = ["--horizon", "4", "--draws", "500", "--seed", "2", "--quantiles", "0.05,0.95", "--return-draws"];
    let mut saved = vec!["forecast", "--fit", "fit.json"];
    saved.extend(flags);
    let mut refit = vec!["forecast", "sim.csv", "--dist", "std"];
    refit.extend(flags);
    let a = ok(dir.path(), &saved);
    assert_eq!(a, ok(dir.path(), &refit));
    let doc = json(&a);
    assert_valid("forecast", &doc);
    assert_eq!(doc["draws"].as_array().unwrap().len(), 4);
    assert_eq!(doc["quantiles"][1]["values"].as_array().unwrap().len(), 4);
    let no_draws = json(&ok(dir.path(), &["forecast", "--fit", "fit.json", "--horizon", "4", "--draws", "500"]));
    assert!(no_draws["draws"].is_null());
}

fn read_series(path: &std::path::Path) -> Series {
    let text = std::fs::read_to_string(path).unwrap();
    Series::univariate(text.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect())
}

#[test]
fn roll_and_backtest_wrap_the_library_exactly() {
    let dir = temp();
    simulate_std(dir.path(), "sim.csv", 460, 9);
    let text = ok(
        dir.path(),
        &["roll", "sim.csv", "--dist", "std", "--forecast-length", "40", "--refit-every", "20", "--refit-window", "moving"],
    );
    let doc = json(&text);
    assert_valid("roll", &doc);
    let from_cli: RollResult = serde_json::from_str(&text).unwrap();
    let spec = GasSpec::new(
        Distribution::univariate(DistributionId::Std).unwrap(),
        Scaling::Identity,
        GasPar { scale: true, ..GasPar::default() },
        false,
    )
    .unwrap();
    let y = read_series(&dir.path().join("sim.csv"));
    let direct = roll(&spec, &y, 40, 20, RefitWindow::Moving, &OptimizerConfig::default()).unwrap();
    assert_eq!(from_cli, direct);

    std::fs::write(dir.path().join("roll.json"), &text).unwrap();
    let bt_text = ok(dir.path(), &["backtest", "roll.json", "--lower", "-1.0", "--upper", "1.0"]);
    let bt = json(&bt_text);
    assert_valid("backtest", &bt);
    assert_eq!(bt["summary"].as_object().unwrap().len(), 6);
    let fields = ["\"LS\"", "\"uniform\"", "\"center\"", "\"tails\"", "\"tail_r\"", "\"tail_l\""];
    let positions: Vec<usize> = fields.iter().map(|f| bt_text.find(f).unwrap()).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]), "{positions:?}");
    let expected = backtest_density(&direct, &Grid::new(-1.0, 1.0, 1000).unwrap(), 0.0, 1.0).unwrap();
    assert_eq!(bt["summary"]["LS"].as_f64().unwrap(), expected.average_nls);
    assert_eq!(bt["summary"]["tail_l"].as_f64().unwrap(), expected.average_wcrps.tail_l);
    assert_eq!(gas(dir.path(), &["backtest", "roll.json", "--lower", "-1.0"]).status.code(), Some(2));
}

#[test]
fn dm_on_score_files() {
    let dir = temp();
    let a: Vec<String> = (0..60).map(|i| format!("{}", 1.0 + ((i * 37 % 11) as f64) / 10.0)).collect();
    let b: Vec<String> = (0..60).map(|i| format!("{}", 1.5 + ((i * 13 % 7) as f64) / 10.0)).collect();
    write(dir.path(), "a.csv", &format!("loss\n{}\n", a.join("\n")));
    write(dir.path(), "b.csv", &format!("loss\n{}\n", b.join("\n")));
    let ab = json(&ok(dir.path(), &["dm", "a.csv", "b.csv"]));
    assert_valid("dm", &ab);
    let ba = json(&ok(dir.path(), &["dm", "b.csv", "a.csv"]));
    assert_eq!(ab["statistic"].as_f64().unwrap(), -ba["statistic"].as_f64().unwrap());
    assert_eq!(ab["bandwidth"], 3);
    assert!(ab["statistic"].as_f64().unwrap() < 0.0);
}

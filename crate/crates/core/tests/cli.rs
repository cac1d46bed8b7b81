use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use nalgebra::DMatrix;
use tvp_sparse::cli::RunConfig;
use tvp_sparse::dist::RngStream;
use tvp_sparse::experiments::{generate_dgp, generate_var_dgp, DgpConfig, Panel, VarDgpConfig};
use tvp_sparse::models::DrawTable;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tvpsparse"))
}

fn dates(n: usize) -> Vec<String> {
    (0..n).map(|t| format!("t{t:04}")).collect()
}

fn regression_csv(dir: &Path, k: usize, t_len: usize) -> PathBuf {
    let cfg = DgpConfig {
        k,
        t_len,
        sparsity: 0.5,
        replications: 1,
        seed: 3,
    };
    let sim = generate_dgp(&cfg, &mut RngStream::new(3, 0)).unwrap();
    let mut names = vec!["y".to_string()];
    names.extend((0..k).map(|j| format!("x{j}")));
    let data = DMatrix::from_fn(t_len, k + 1, |t, j| if j == 0 { sim.y[t] } else { sim.x[(t, j - 1)] });
    let path = dir.join("reg.csv");
    Panel::new(dates(t_len), names, data).unwrap().write_csv(&path).unwrap();
    path
}

fn var_csv(dir: &Path, t_len: usize) -> PathBuf {
    let cfg = VarDgpConfig {
        t_len,
        ..VarDgpConfig::default()
    };
    let sim = generate_var_dgp(&cfg, &mut RngStream::new(5, 0)).unwrap();
    let path = dir.join("var.csv");
    Panel::new(dates(t_len), sim.names.clone(), sim.y.clone()).unwrap().write_csv(&path).unwrap();
    path
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn simulate_writes_one_row_per_cell_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sim.json",
        r#"{"sampler": {"n_draws": 400, "n_burn": 200},
            "simulate": {"grid": {"k": [5], "t_len": [120], "sparsity": ["sparse"], "priors": ["hs"], "replications": 2}}}"#,
    );
    let outs = ["a", "b"].map(|s| dir.path().join(s));
    for o in &outs {
        let (code, err) = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", o.to_str().unwrap(), "--seed", "11"]);
        assert_eq!(code, 0, "{err}");
    }
    let mae = read(&outs[0].join("mae.csv"));
    let hits = read(&outs[0].join("hit_rates.csv"));
    // header + raw/sparse rows of the single cell
    assert_eq!(mae.lines().count(), 3);
    assert_eq!(hits.lines().count(), 2);
    assert!(mae.starts_with("k,t,sparsity,prior,sparsified,n_ok,n_failed,mae"));
    for f in ["mae.csv", "hit_rates.csv", "replications.csv"] {
        assert_eq!(
            fs::read(outs[0].join(f)).unwrap(),
            fs::read(outs[1].join(f)).unwrap(),
            "{f} differs between reruns"
        );
    }
}

#[test]
fn simulate_with_zero_replications_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sim.json",
        r#"{"simulate": {"grid": {"k": [5], "t_len": [50], "sparsity": ["sparse"], "priors": ["hs"], "replications": 0}}}"#,
    );
    let (code, err) = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("replications"));
}

#[test]
fn fit_regression_artifacts_and_pips_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (k, t_len) = (4, 80);
    let data = regression_csv(dir.path(), k, t_len);
    let json = format!(
        r#"{{"sampler": {{"n_draws": 300, "n_burn": 100}},
            "fit": {{"model": "regression", "prior": {{"kind": "hs"}}, "data": {:?}}}}}"#,
        data.to_str().unwrap()
    );
    let cfg = write_config(dir.path(), "fit.json", &json);
    let out = dir.path().join("fit");
    let (code, err) = run(&["fit", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");

    let pips = read(&out.join("pips.csv"));
    assert_eq!(pips.lines().count() - 1, 2 * k);
    let quant = read(&out.join("beta_quantiles.csv"));
    assert!(quant.lines().next().unwrap().ends_with("q5,q50,q95"));
    // raw and sparse rows for every (t, coefficient)
    assert_eq!(quant.lines().count() - 1, 2 * t_len * k);
    assert!(quant.lines().any(|l| l.contains(",sparse,")));

    let table = DrawTable::load(&out.join("draws.bin")).unwrap();
    assert_eq!(table.n_draws(), 200);
    let sidecar: serde_json::Value = serde_json::from_str(&read(&out.join("draws.json"))).unwrap();
    assert_eq!(sidecar["n_draws"], 200);

    // pips from the stored draws equal the PIPs of the fit
    let pcfg = write_config(
        dir.path(),
        "pips.json",
        &format!(r#"{{"pips": {{"draws": {:?}}}}}"#, out.join("draws.bin").to_str().unwrap()),
    );
    let pout = dir.path().join("pips");
    let (code, err) = run(&["pips", "--config", pcfg.to_str().unwrap(), "--out", pout.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let fit_pips: Vec<String> = pips.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().to_string()).collect();
    let file_pips: Vec<String> = read(&pout.join("pips.csv"))
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().to_string())
        .collect();
    assert_eq!(fit_pips, file_pips);

    // emitted metadata re-parses to the effective configuration
    let meta = RunConfig::load(&out.join("run.json")).unwrap();
    assert_eq!(meta.out, out);
    assert_eq!(RunConfig::from_json(&meta.to_json()).unwrap(), meta);
}

#[test]
fn fit_var_writes_one_block_per_equation() {
    let dir = tempfile::tempdir().unwrap();
    let data = var_csv(dir.path(), 60);
    let json = format!(
        r#"{{"sampler": {{"n_draws": 200, "n_burn": 100, "sv": true}},
            "fit": {{"model": "var", "prior": {{"kind": "dl"}}, "data": {:?}, "lags": 1}}}}"#,
        data.to_str().unwrap()
    );
    let cfg = write_config(dir.path(), "var.json", &json);
    let out = dir.path().join("var");
    let (code, err) = run(&["fit", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let pips = read(&out.join("pips.csv"));
    // equation i has 3 lags + intercept + i contemporaneous terms, twice
    assert_eq!(pips.lines().count() - 1, 2 * (4 + 4 + 4 + 0 + 1 + 2));
    let table = DrawTable::load(&out.join("draws.bin")).unwrap();
    assert!(table.labels.iter().any(|l| l.starts_with("y3/")));
    assert!(table.labels.iter().any(|l| l.ends_with("sv_mu")));
}

#[test]
fn fit_missing_data_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "fit.json",
        r#"{"fit": {"model": "regression", "prior": {"kind": "hs"}, "data": "/nonexistent/d.csv"}}"#,
    );
    let (code, err) = run(&["fit", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn malformed_data_names_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    fs::write(&data, "date,y,x\n1,0.5,0.1\n2,oops,0.2\n").unwrap();
    let json = format!(
        r#"{{"fit": {{"model": "regression", "prior": {{"kind": "hs"}}, "data": {:?}}}}}"#,
        data.to_str().unwrap()
    );
    let cfg = write_config(dir.path(), "fit.json", &json);
    let (code, err) = run(&["fit", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("bad.csv") && err.contains('3'), "{err}");
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "u.json", r#"{"sede": 1}"#);
    let (code, _) = run(&["fit", "--config", unknown.to_str().unwrap()]);
    assert_eq!(code, 2);
    let (code, _) = run(&["fit"]);
    assert_eq!(code, 2);
    let (code, _) = run(&["frobnicate"]);
    assert_eq!(code, 2);
    let empty = write_config(dir.path(), "e.json", "{}");
    let (code, err) = run(&["fit", "--config", empty.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 2, "{err}");
    let (code, _) = run(&["fit", "--config", empty.to_str().unwrap(), "--threads", "0"]);
    assert_eq!(code, 2);
}

fn forecast_json(data: &Path, horizons: &str, benchmark: &str) -> String {
    format!(
        r#"{{"sampler": {{"n_draws": 150, "n_burn": 50}},
            "forecast": {{"data": {:?}, "task": {{"horizons": {horizons}, "origin": 55, "lags": 1}},
                "models": [{{"label": "tvp-sv", "prior": {{"kind": "dl"}}}}],
                "benchmark": {benchmark:?}}}}}"#,
        data.to_str().unwrap()
    )
}

#[test]
fn forecast_metrics_layout_and_self_benchmark() {
    let dir = tempfile::tempdir().unwrap();
    let data = var_csv(dir.path(), 60);
    let cfg = write_config(dir.path(), "f.json", &forecast_json(&data, "[1, 4]", "tvp-sv"));
    let out = dir.path().join("f");
    let (code, err) = run(&["forecast", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let text = read(&out.join("forecast_metrics.csv"));
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    let header = rdr.headers().unwrap().clone();
    assert_eq!(
        header.iter().collect::<Vec<_>>(),
        ["model", "prior", "sparsified", "variable", "horizon", "metric", "value"]
    );
    let rmse_rows = |sparse: &str| {
        rows.iter()
            .filter(|r| &r[0] == "tvp-sv" && &r[2] == sparse && &r[5] == "rmse" && &r[3] != "focus-joint")
            .count()
    };
    // 3 variables x 2 horizons
    assert_eq!(rmse_rows("false"), 6);
    assert_eq!(rmse_rows("true"), 6);
    for r in rows.iter().filter(|r| &r[0] == "tvp-sv" && &r[2] == "false" && &r[5] == "rel_rmse") {
        assert_eq!(r[6].parse::<f64>().unwrap(), 1.0, "{r:?}");
    }
    assert!(rows.iter().any(|r| &r[0] == "white-noise" && &r[5] == "lpl"));
    assert!(read(&out.join("forecast_periods.csv")).lines().count() > 1);
}

#[test]
fn forecast_zero_horizon_and_missing_benchmark_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let data = var_csv(dir.path(), 60);
    for (h, b) in [("[0]", "white-noise"), ("[1]", "var-const")] {
        let cfg = write_config(dir.path(), "f.json", &forecast_json(&data, h, b));
        let (code, err) = run(&["forecast", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
        assert_eq!(code, 2, "{err}");
    }
}

#[test]
fn thread_count_is_honoured_and_reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = var_csv(dir.path(), 60);
    let json = format!(
        r#"{{"sampler": {{"n_draws": 150, "n_burn": 50}},
            "fit": {{"model": "var", "prior": {{"kind": "ng"}}, "data": {:?}, "lags": 1}}}}"#,
        data.to_str().unwrap()
    );
    let cfg = write_config(dir.path(), "v.json", &json);
    let outs = ["a", "b"].map(|s| dir.path().join(s));
    for o in &outs {
        let (code, err) = run(&["fit", "--config", cfg.to_str().unwrap(), "--out", o.to_str().unwrap(), "--threads", "2"]);
        assert_eq!(code, 0, "{err}");
    }
    for f in ["draws.bin", "pips.csv", "beta_quantiles.csv", "summary.json"] {
        assert_eq!(fs::read(outs[0].join(f)).unwrap(), fs::read(outs[1].join(f)).unwrap(), "{f}");
    }
}

//! Command-line front end: `simulate`, `fit`, `forecast` and `pips`.
//!
//! Every command reads one JSON [`RunConfig`], applies flag overrides, writes
//! the effective configuration to `run.json` in the output directory and
//! then its artifacts. Output bytes depend only on (config, seed, threads).

mod config;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::DMatrix;
use serde::Serialize;

pub use config::{
    FitConfig, ForecastConfig, ForecastModelConfig, ModelKind, PipsConfig, RunConfig, SimulateConfig, WHITE_NOISE,
};

use crate::dist::RngStream;
use crate::error::{Error, Result};
use crate::experiments::{
    period_trajectory, relative_metrics, run_forecast_exercise, run_study, summarize_cells, summarize_forecasts,
    white_noise_forecasts, ForecastModel, ForecastRecord, Manifest, MetricRow, Panel,
};
use crate::models::{
    coef_labels, fit_tvp_regression, fit_tvp_var, DrawSink, DrawTable, DrawTableSink, FitSummary,
    PathQuantileSink, PathQuantiles, PipSink, RegressionSpec, VarSpec, DRAW_FILE_MAGIC,
};
use crate::savs::PipTable;

#[derive(Debug, Parser)]
#[command(name = "tvpsparse", version, about = "Shrink-then-sparsify TVP regressions and TVP-VARs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (results are reproducible at a fixed count).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["paper", "desk"])]
    pub profile: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Simulation study: MAE and hit-rate tables over a grid.
    Simulate,
    /// Fit a TVP regression or TVP-VAR and store draws, PIPs and path quantiles.
    Fit,
    /// Recursive forecast evaluation against a benchmark.
    Forecast,
    /// Posterior inclusion probabilities from a stored draw file.
    Pips,
}

impl Cli {
    /// Load the config and apply flag overrides.
    pub fn resolve(&self) -> Result<RunConfig> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| Error::usage("--config PATH is required"))?;
        let mut cfg = RunConfig::load(path)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.threads {
            cfg.threads = t;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(p) = &self.profile {
            cfg.profile = Some(serde_json::from_value(serde_json::Value::String(p.clone())).expect("checked by clap"));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parse arguments, run, and map the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match cli.resolve().and_then(|cfg| run(cli.command, &cfg)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command, cfg: &RunConfig) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::usage(format!("cannot start {} worker threads: {e}", cfg.threads)))?;
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join("run.json"), cfg.to_json())?;
    pool.install(|| match command {
        Command::Simulate => cmd_simulate(cfg),
        Command::Fit => cmd_fit(cfg),
        Command::Forecast => cmd_forecast(cfg),
        Command::Pips => cmd_pips(cfg),
    })
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T> {
    s.as_ref()
        .ok_or_else(|| Error::usage(format!("the config has no \"{name}\" section")))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::usage(format!("cannot write {}: {e}", path.display())))
}

fn write_rows<S: Serialize>(path: &Path, rows: &[S]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for r in rows {
        w.serialize(r).map_err(crate::experiments::csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<()> {
    let sim = section(&cfg.simulate, "simulate")?;
    let results = run_study(&sim.grid, &cfg.sampler_settings(), cfg.seed)?;
    let cells = summarize_cells(&results);

    let mut mae = csv_writer(&cfg.out.join("mae.csv"))?;
    let mut hits = csv_writer(&cfg.out.join("hit_rates.csv"))?;
    let w = |e: csv::Error| crate::experiments::csv_err(e);
    mae.write_record(["k", "t", "sparsity", "prior", "sparsified", "n_ok", "n_failed", "mae"]).map_err(w)?;
    hits.write_record(["k", "t", "sparsity", "prior", "n_ok", "n_failed", "hit_rate"]).map_err(w)?;
    for c in &cells {
        let key = [c.k.to_string(), c.t_len.to_string(), c.sparsity.as_str().into(), c.prior.to_string()];
        for (flag, v) in [("false", c.mae_raw), ("true", c.mae_sparse)] {
            let mut rec = key.to_vec();
            rec.extend([flag.to_string(), c.n_ok.to_string(), c.n_failed.to_string(), fmt_opt(v)]);
            mae.write_record(&rec).map_err(w)?;
        }
        let mut rec = key.to_vec();
        rec.extend([c.n_ok.to_string(), c.n_failed.to_string(), fmt_opt(c.hit_rate)]);
        hits.write_record(&rec).map_err(w)?;
    }
    mae.flush()?;
    hits.flush()?;

    let mut reps = csv_writer(&cfg.out.join("replications.csv"))?;
    reps.write_record(["k", "t", "sparsity", "prior", "replication", "mae_raw", "mae_sparse", "hit_rate", "error"])
        .map_err(w)?;
    for r in &results {
        let mut rec = vec![
            r.k.to_string(),
            r.t_len.to_string(),
            r.sparsity.as_str().to_string(),
            r.prior.to_string(),
            r.replication.to_string(),
        ];
        match &r.outcome {
            Ok(s) => rec.extend([s.mae_raw.to_string(), s.mae_sparse.to_string(), fmt_opt(s.hit_rate), String::new()]),
            Err(e) => rec.extend([String::new(), String::new(), String::new(), e.clone()]),
        }
        reps.write_record(&rec).map_err(w)?;
    }
    reps.flush()?;
    for c in cells.iter().filter(|c| c.n_failed > 0) {
        eprintln!(
            "warning: cell K={} T={} {} {}: {} of {} replications failed (see replications.csv)",
            c.k,
            c.t_len,
            c.sparsity.as_str(),
            c.prior,
            c.n_failed,
            c.n_ok + c.n_failed
        );
    }
    Ok(())
}

/// Per-equation sinks used by `fit`.
struct FitSinks {
    labels: Vec<String>,
    blocks: Vec<&'static str>,
    paths: PathQuantileSink,
    pips: Option<PipSink>,
    table: Option<DrawTableSink>,
}

impl DrawSink for FitSinks {
    fn accept(&mut self, r: &crate::models::DrawRecord<'_>) -> Result<()> {
        self.paths.accept(r)?;
        if let Some(p) = &mut self.pips {
            p.accept(r)?;
        }
        if let Some(t) = &mut self.table {
            t.accept(r)?;
        }
        Ok(())
    }
}

struct EquationOutput {
    name: String,
    regressors: Vec<String>,
    sinks: FitSinks,
    summary: FitSummary,
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<()> {
    let fit = section(&cfg.fit, "fit")?;
    let settings = cfg.sampler_settings();
    let panel = Panel::read_csv(&fit.data)?;
    let tvp = !settings.tvp_off;
    let make = |t_len: usize, names: &[String], n_cov: usize, prefix: &str| {
        let labels = coef_labels(names, n_cov, tvp);
        let l: Vec<String> = labels.iter().map(|(l, _)| l.clone()).collect();
        FitSinks {
            blocks: labels.iter().map(|(_, b)| b.as_str()).collect(),
            paths: PathQuantileSink::new(t_len, names.len()),
            pips: settings.sparsify.then(PipSink::default),
            table: fit.write_draws.then(|| DrawTableSink::new(&l, prefix)),
            labels: l,
        }
    };

    let (outputs, dates): (Vec<EquationOutput>, Vec<String>) = match fit.model {
        ModelKind::Regression => {
            let response = fit.response.clone().unwrap_or_else(|| panel.names[0].clone());
            let covs: Vec<String> = match &fit.variables {
                Some(v) => v.clone(),
                None => panel.names.iter().filter(|n| **n != response).cloned().collect(),
            };
            if covs.is_empty() {
                return Err(Error::usage("the regression has no covariates"));
            }
            let y = panel
                .column(&response)
                .ok_or_else(|| Error::usage(format!("response {response} is not in the data")))?;
            let x = panel.select(&covs)?.data;
            let spec = RegressionSpec {
                y,
                x,
                prior: fit.prior.clone(),
                settings: settings.clone(),
            };
            let mut sinks = make(panel.dates.len(), &covs, 0, "");
            let summary = fit_tvp_regression(&spec, &mut RngStream::new(cfg.seed, 0), &mut sinks)?;
            let out = EquationOutput {
                name: response,
                regressors: covs,
                sinks,
                summary,
            };
            (vec![out], panel.dates.clone())
        }
        ModelKind::Var => {
            let vars = fit.variables.clone().unwrap_or_else(|| panel.names.clone());
            let y = panel.select(&vars)?.data;
            let spec = VarSpec::new(y, vars.clone(), fit.lags, fit.prior.clone(), settings.clone());
            let t_eff = panel.dates.len().saturating_sub(fit.lags);
            let (_, fits) = fit_tvp_var(&spec, &RngStream::new(cfg.seed, 0), |i, names| {
                make(t_eff, names, i, &format!("{}/", vars[i]))
            })?;
            let outs = fits
                .into_iter()
                .enumerate()
                .map(|(i, (sinks, summary))| {
                    let k = sinks.labels.len() / if tvp { 2 } else { 1 };
                    let regressors = sinks.labels[..k]
                        .iter()
                        .map(|l| l.split_once(':').map_or(l.clone(), |x| x.1.into()))
                        .collect();
                    EquationOutput {
                        name: vars[i].clone(),
                        regressors,
                        sinks,
                        summary,
                    }
                })
                .collect();
            (outs, panel.dates[fit.lags..].to_vec())
        }
    };
    write_fit_outputs(cfg, fit, &outputs, &dates)
}

fn write_fit_outputs(cfg: &RunConfig, fit: &FitConfig, outputs: &[EquationOutput], dates: &[String]) -> Result<()> {
    let w = |e: csv::Error| crate::experiments::csv_err(e);
    // pointwise quantiles of β paths
    let mut q = csv_writer(&cfg.out.join("beta_quantiles.csv"))?;
    let mut header = vec!["equation".to_string(), "t".into(), "date".into(), "coefficient".into(), "variant".into()];
    header.extend(fit.quantiles.iter().map(|p| format!("q{}", p * 100.0)));
    q.write_record(&header).map_err(w)?;
    for eq in outputs {
        let pq: PathQuantiles = eq.sinks.paths.finish(&fit.quantiles)?;
        let mut variants = vec![("raw", &pq.raw)];
        if let Some(s) = &pq.sparse {
            variants.push(("sparse", s));
        }
        for (variant, mats) in variants {
            for t in 0..dates.len() {
                for (j, reg) in eq.regressors.iter().enumerate() {
                    let mut rec = vec![eq.name.clone(), (t + 1).to_string(), dates[t].clone(), reg.clone(), variant.into()];
                    rec.extend(mats.iter().map(|m| m[(t, j)].to_string()));
                    q.write_record(&rec).map_err(w)?;
                }
            }
        }
    }
    q.flush()?;

    // PIPs
    if cfg.sampler_settings().sparsify {
        let mut p = csv_writer(&cfg.out.join("pips.csv"))?;
        p.write_record(["equation", "coefficient", "block", "pip"]).map_err(w)?;
        for eq in outputs {
            let table: PipTable = eq.sinks.pips.as_ref().expect("sparsify is on").finish()?;
            for ((label, block), pip) in eq.sinks.labels.iter().zip(&eq.sinks.blocks).zip(&table.pip) {
                p.write_record([eq.name.as_str(), label, block, &pip.to_string()]).map_err(w)?;
            }
        }
        p.flush()?;
    }

    // draw file and sidecar
    if fit.write_draws {
        let tables = outputs
            .iter()
            .map(|eq| eq.sinks.table.clone().expect("write_draws is on").into_table())
            .collect::<Result<Vec<_>>>()?;
        let table = DrawTable::hstack(tables)?;
        table.save(&cfg.out.join("draws.bin"))?;
        let sidecar = serde_json::json!({
            "format": String::from_utf8_lossy(DRAW_FILE_MAGIC),
            "n_columns": table.labels.len(),
            "n_draws": table.n_draws(),
            "thin": cfg.sampler_settings().thin,
            "labels": table.labels,
            "config": cfg,
        });
        fs::write(cfg.out.join("draws.json"), serde_json::to_string_pretty(&sidecar).expect("json"))?;
    }

    let summary: Vec<_> = outputs
        .iter()
        .map(|eq| {
            serde_json::json!({
                "equation": eq.name,
                "n_kept": eq.summary.n_kept,
                "mh_acceptance": eq.summary.mh_acceptance,
                "warnings": eq.summary.warnings,
            })
        })
        .collect();
    for eq in outputs {
        for warn in &eq.summary.warnings {
            eprintln!("warning: {}: {warn}", eq.name);
        }
    }
    fs::write(cfg.out.join("summary.json"), serde_json::to_string_pretty(&summary).expect("json"))?;
    Ok(())
}

/// PIPs from the `sparse:` columns of a stored draw file.
pub fn pips_from_table(table: &DrawTable) -> Result<Vec<(String, f64)>> {
    let out: Vec<(String, f64)> = table
        .labels
        .iter()
        .zip(&table.columns)
        .filter_map(|(l, c)| {
            let (prefix, rest) = match l.split_once("sparse:") {
                Some(x) => x,
                None => return None,
            };
            let kept = c.iter().filter(|v| **v != 0.0).count();
            Some((format!("{prefix}{rest}"), kept as f64 / c.len().max(1) as f64))
        })
        .collect();
    if out.is_empty() {
        return Err(Error::usage("the draw file holds no sparsified draws"));
    }
    Ok(out)
}

pub fn cmd_pips(cfg: &RunConfig) -> Result<()> {
    let p = section(&cfg.pips, "pips")?;
    let table = DrawTable::load(&p.draws).map_err(|e| match e {
        Error::Io(io) => Error::usage(format!("cannot read draw file {}: {io}", p.draws.display())),
        other => other,
    })?;
    let pips = pips_from_table(&table)?;
    let mut w = csv_writer(&cfg.out.join("pips.csv"))?;
    let ce = |e: csv::Error| crate::experiments::csv_err(e);
    w.write_record(["coefficient", "pip", "n_draws"]).map_err(ce)?;
    for (label, pip) in pips {
        w.write_record([label, pip.to_string(), table.n_draws().to_string()]).map_err(ce)?;
    }
    w.flush()?;
    Ok(())
}

fn forecast_panel(f: &ForecastConfig) -> Result<Panel> {
    let raw = Panel::read_csv(&f.data)?;
    let panel = match &f.manifest {
        Some(m) => Manifest::load(m)?.transform_panel(&raw, f.size)?,
        None => raw,
    };
    match &f.variables {
        Some(v) => panel.select(v),
        None => Ok(panel),
    }
}

pub fn cmd_forecast(cfg: &RunConfig) -> Result<()> {
    let f = section(&cfg.forecast, "forecast")?;
    let panel = forecast_panel(f)?;
    let data: &DMatrix<f64> = &panel.data;
    let base = cfg.sampler_settings();

    let mut runs: Vec<(String, String, Vec<ForecastRecord>)> = Vec::new();
    runs.push((
        WHITE_NOISE.into(),
        "none".into(),
        white_noise_forecasts(data, &panel.names, &f.task, WHITE_NOISE)?,
    ));
    for m in &f.models {
        let model = ForecastModel {
            label: m.label.clone(),
            prior: m.prior.clone(),
            settings: crate::models::SamplerSettings {
                tvp_off: m.tvp_off,
                sv: m.sv,
                ..base.clone()
            },
        };
        let recs = run_forecast_exercise(data, &panel.names, &f.task, &model, cfg.seed)?;
        runs.push((m.label.clone(), m.prior.kind.to_string(), recs));
    }

    let bench = runs
        .iter()
        .find(|(l, _, _)| *l == f.benchmark)
        .ok_or_else(|| Error::usage(format!("benchmark run {} is missing", f.benchmark)))?;
    let bench_rows = summarize_forecasts(&bench.2, &bench.1);

    let mut metrics: Vec<MetricRow> = Vec::new();
    let mut periods = Vec::new();
    for (label, prior, recs) in &runs {
        let rows = summarize_forecasts(recs, prior);
        metrics.extend(relative_metrics(&rows, &bench_rows)?);
        metrics.extend(rows);
        for sparse in [false, true] {
            if !recs.iter().any(|r| r.sparse == sparse) {
                continue;
            }
            for &h in &f.task.horizons {
                let traj = period_trajectory(recs, sparse, h, &f.task.focus, Some((&bench.2, false)));
                periods.extend(traj.into_iter().map(|p| PeriodCsv {
                    model: label.clone(),
                    sparsified: p.sparsified,
                    date: panel.dates[p.target].clone(),
                    horizon: p.horizon,
                    log_score: p.log_score,
                    cum_log_score: p.cum_log_score,
                    sq_error: p.sq_error,
                    cum_sq_error: p.cum_sq_error,
                    cum_log_bf_vs_benchmark: p.cum_log_bf,
                }));
            }
        }
    }
    write_rows(&cfg.out.join("forecast_metrics.csv"), &metrics)?;
    write_rows(&cfg.out.join("forecast_periods.csv"), &periods)?;
    let all: Vec<&ForecastRecord> = runs.iter().flat_map(|r| r.2.iter()).collect();
    write_rows(&cfg.out.join("forecast_records.csv"), &all)?;
    Ok(())
}

#[derive(Serialize)]
struct PeriodCsv {
    model: String,
    sparsified: bool,
    date: String,
    horizon: usize,
    log_score: f64,
    cum_log_score: f64,
    sq_error: f64,
    cum_sq_error: f64,
    cum_log_bf_vs_benchmark: Option<f64>,
}

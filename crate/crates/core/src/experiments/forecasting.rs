use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{mean, rmse};
use crate::dist::{std_normal_cdf, RngStream};
use crate::error::{Error, Result};
use crate::models::{
    draw_predictive, fit_tvp_var, log_mean_exp, mvn_ln_pdf, ForecastSink, PredictiveDraw, SamplerSettings,
    VarPosterior, VarSpec,
};
use crate::priors::PriorConfig;
use crate::stochvol::VolForecast;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastTask {
    pub horizons: Vec<usize>,
    /// Row of the panel that is the first evaluation target. Forecasts are
    /// made from every estimation end `origin − 1, …, T − 2`.
    pub origin: usize,
    /// Variables scored jointly; empty means all.
    #[serde(default)]
    pub focus: Vec<String>,
    #[serde(default = "default_lags")]
    pub lags: usize,
    #[serde(default)]
    pub propagation: VolForecast,
}

fn default_lags() -> usize {
    2
}

impl ForecastTask {
    pub fn validate(&self, t_len: usize) -> Result<()> {
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return Err(Error::usage("horizons must be a non-empty list of positive integers"));
        }
        if self.lags == 0 {
            return Err(Error::usage("the VAR needs at least one lag"));
        }
        if self.origin >= t_len {
            return Err(Error::usage(format!("origin {} is beyond the {t_len} observations", self.origin)));
        }
        // the first estimation sample must leave observations after lagging
        if self.origin < self.lags + 10 {
            return Err(Error::usage(format!(
                "origin {} leaves too little data before the first forecast",
                self.origin
            )));
        }
        Ok(())
    }

    /// Estimation ends, as the last row index used for fitting.
    pub fn ends(&self, t_len: usize) -> std::ops::RangeInclusive<usize> {
        self.origin - 1..=t_len - 2
    }
}

/// A model in the forecast comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastModel {
    pub label: String,
    pub prior: PriorConfig,
    pub settings: SamplerSettings,
}

/// One scored forecast of one variable (or the joint focus set).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ForecastRecord {
    pub model: String,
    pub sparse: bool,
    pub end: usize,
    pub target: usize,
    pub horizon: usize,
    /// Variable name, or `focus-joint` for the joint focus density.
    pub variable: String,
    pub mean: f64,
    pub realized: f64,
    pub log_score: f64,
    pub pit: f64,
}

pub const JOINT_FOCUS: &str = "focus-joint";

fn focus_indices(names: &[String], focus: &[String]) -> Result<Vec<usize>> {
    if focus.is_empty() {
        return Ok((0..names.len()).collect());
    }
    focus
        .iter()
        .map(|f| {
            names
                .iter()
                .position(|n| n == f)
                .ok_or_else(|| Error::usage(format!("focus variable {f} is not in the model")))
        })
        .collect()
}

/// Score a set of Gaussian predictive draws against a realization.
fn score_draws(
    model: &str,
    sparse: bool,
    (end, target, horizon): (usize, usize, usize),
    draws: &[PredictiveDraw],
    realized: &DVector<f64>,
    names: &[String],
    focus: &[usize],
) -> Result<Vec<ForecastRecord>> {
    let m = realized.len();
    let mut out = Vec::with_capacity(m + 1);
    let rec = |variable: String, mean: f64, realized: f64, log_score: f64, pit: f64| ForecastRecord {
        model: model.to_string(),
        sparse,
        end,
        target,
        horizon,
        variable,
        mean,
        realized,
        log_score,
        pit,
    };
    let mut lp = vec![0.0; draws.len()];
    for i in 0..m {
        let mut pit = 0.0;
        let mut mu = 0.0;
        for (l, d) in lp.iter_mut().zip(draws) {
            let (mi, vi) = (d.mean[i], d.cov[(i, i)]);
            *l = crate::dist::normal_ln_pdf(realized[i], mi, vi);
            pit += std_normal_cdf((realized[i] - mi) / vi.sqrt());
            mu += mi;
        }
        let n = draws.len() as f64;
        out.push(rec(names[i].clone(), mu / n, realized[i], log_mean_exp(&lp), pit / n));
    }
    let sub_y = DVector::from_iterator(focus.len(), focus.iter().map(|&i| realized[i]));
    for (l, d) in lp.iter_mut().zip(draws) {
        let mean = DVector::from_iterator(focus.len(), focus.iter().map(|&i| d.mean[i]));
        let cov = DMatrix::from_fn(focus.len(), focus.len(), |a, b| d.cov[(focus[a], focus[b])]);
        *l = mvn_ln_pdf(&sub_y, &mean, &cov)?;
    }
    out.push(rec(JOINT_FOCUS.into(), f64::NAN, f64::NAN, log_mean_exp(&lp), f64::NAN));
    Ok(out)
}

/// Recursive out-of-sample forecasts of a TVP-VAR(-SV) model.
///
/// Each estimation end is an independent job on the current rayon pool with
/// its own derived stream, so results do not depend on scheduling. Raw and
/// sparsified forecasts come from the same chain; a run without SAVS
/// produces raw records only.
pub fn run_forecast_exercise(
    data: &DMatrix<f64>,
    names: &[String],
    task: &ForecastTask,
    model: &ForecastModel,
    seed: u64,
) -> Result<Vec<ForecastRecord>> {
    let t_len = data.nrows();
    task.validate(t_len)?;
    model.settings.validate()?;
    let focus = focus_indices(names, &task.focus)?;
    let ends: Vec<usize> = task.ends(t_len).collect();
    let per_end = ends
        .into_par_iter()
        .map(|end| {
            let history = data.rows(0, end + 1).into_owned();
            let spec = VarSpec::new(history.clone(), names.to_vec(), task.lags, model.prior.clone(), model.settings.clone());
            let base = RngStream::new(seed, 2).derive(end as u64);
            let (var_data, fits) = fit_tvp_var(&spec, &base.derive(0), |_, _| ForecastSink::default())?;
            let post = VarPosterior::new(
                fits.into_iter().map(|(s, _)| s.draws).collect(),
                var_data.k(),
                task.lags,
                spec.intercept,
            )?;
            let mut rng = base.derive(1);
            let mut recs = Vec::new();
            for &h in &task.horizons {
                let target = end + h;
                if target >= t_len {
                    continue;
                }
                let realized = DVector::from_iterator(names.len(), data.row(target).iter().copied());
                let mut raw = Vec::with_capacity(post.n_draws());
                let mut sparse = Vec::with_capacity(post.n_draws());
                for d in 0..post.n_draws() {
                    let (r, s) = draw_predictive(&post, d, &history, h, task.propagation, &mut rng)?;
                    raw.push(r);
                    sparse.extend(s);
                }
                let key = (end, target, h);
                recs.extend(score_draws(&model.label, false, key, &raw, &realized, names, &focus)?);
                if !sparse.is_empty() {
                    recs.extend(score_draws(&model.label, true, key, &sparse, &realized, names, &focus)?);
                }
            }
            Ok(recs)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_end.into_iter().flatten().collect())
}

/// Gaussian white-noise benchmark: sample mean and covariance of the
/// estimation window, identical at every horizon.
pub fn white_noise_forecasts(
    data: &DMatrix<f64>,
    names: &[String],
    task: &ForecastTask,
    label: &str,
) -> Result<Vec<ForecastRecord>> {
    let t_len = data.nrows();
    task.validate(t_len)?;
    let focus = focus_indices(names, &task.focus)?;
    let m = data.ncols();
    let mut out = Vec::new();
    for end in task.ends(t_len) {
        let n = end + 1;
        let window = data.rows(0, n);
        let mean = DVector::from_iterator(m, (0..m).map(|j| window.column(j).mean()));
        let centered = DMatrix::from_fn(n, m, |t, j| window[(t, j)] - mean[j]);
        let cov = centered.tr_mul(&centered) / (n as f64 - 1.0);
        let draw = PredictiveDraw { mean, cov };
        for &h in &task.horizons {
            let target = end + h;
            if target >= t_len {
                continue;
            }
            let realized = DVector::from_iterator(m, data.row(target).iter().copied());
            out.extend(score_draws(
                label,
                false,
                (end, target, h),
                std::slice::from_ref(&draw),
                &realized,
                names,
                &focus,
            )?);
        }
    }
    Ok(out)
}

/// One row of the tidy metrics table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricRow {
    pub model: String,
    pub prior: String,
    pub sparsified: bool,
    pub variable: String,
    pub horizon: usize,
    pub metric: String,
    pub value: f64,
}

/// RMSE and average LPL per `(sparse, variable, horizon)`; the joint focus
/// density has LPL only.
pub fn summarize_forecasts(records: &[ForecastRecord], prior: &str) -> Vec<MetricRow> {
    let mut keys: Vec<(String, bool, String, usize)> = Vec::new();
    for r in records {
        let k = (r.model.clone(), r.sparse, r.variable.clone(), r.horizon);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mut out = Vec::new();
    for (model, sparse, variable, horizon) in keys {
        let cell: Vec<&ForecastRecord> = records
            .iter()
            .filter(|r| r.model == model && r.sparse == sparse && r.variable == variable && r.horizon == horizon)
            .collect();
        let row = |metric: &str, value: f64| MetricRow {
            model: model.clone(),
            prior: prior.to_string(),
            sparsified: sparse,
            variable: variable.clone(),
            horizon,
            metric: metric.to_string(),
            value,
        };
        if variable != JOINT_FOCUS {
            let errs: Vec<f64> = cell.iter().map(|r| r.realized - r.mean).collect();
            out.push(row("rmse", rmse(&errs)));
        }
        let ls: Vec<f64> = cell.iter().map(|r| r.log_score).collect();
        out.push(row("lpl", mean(&ls)));
    }
    out
}

/// Relative metrics against a benchmark: RMSE ratio and LPL difference,
/// matched on `(variable, horizon)`. The benchmark's raw rows are used.
pub fn relative_metrics(model: &[MetricRow], benchmark: &[MetricRow]) -> Result<Vec<MetricRow>> {
    let mut out = Vec::new();
    for r in model {
        let b = benchmark
            .iter()
            .find(|b| !b.sparsified && b.variable == r.variable && b.horizon == r.horizon && b.metric == r.metric)
            .ok_or_else(|| {
                Error::usage(format!(
                    "benchmark run lacks {} for {} at horizon {}",
                    r.metric, r.variable, r.horizon
                ))
            })?;
        let (metric, value) = match r.metric.as_str() {
            "rmse" => ("rel_rmse", r.value / b.value),
            "lpl" => ("rel_lpl", r.value - b.value),
            _ => continue,
        };
        out.push(MetricRow {
            metric: metric.into(),
            value,
            ..r.clone()
        });
    }
    Ok(out)
}

/// Per-period trajectory of the joint focus log score and the focus-averaged
/// squared error at one horizon, with cumulative sums.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodRow {
    pub model: String,
    pub sparsified: bool,
    pub target: usize,
    pub horizon: usize,
    pub log_score: f64,
    pub cum_log_score: f64,
    pub sq_error: f64,
    pub cum_sq_error: f64,
    /// Cumulative log predictive Bayes factor against the reference, if any.
    pub cum_log_bf: Option<f64>,
}

pub fn period_trajectory(
    records: &[ForecastRecord],
    sparse: bool,
    horizon: usize,
    focus: &[String],
    reference: Option<(&[ForecastRecord], bool)>,
) -> Vec<PeriodRow> {
    let joint = |recs: &[ForecastRecord], sp: bool, target: usize| {
        recs.iter()
            .find(|r| r.sparse == sp && r.horizon == horizon && r.target == target && r.variable == JOINT_FOCUS)
            .map(|r| r.log_score)
    };
    let mut targets: Vec<usize> = records
        .iter()
        .filter(|r| r.sparse == sparse && r.horizon == horizon && r.variable == JOINT_FOCUS)
        .map(|r| r.target)
        .collect();
    targets.sort_unstable();
    let (mut cum_ls, mut cum_se, mut cum_bf) = (0.0, 0.0, 0.0);
    let mut out = Vec::with_capacity(targets.len());
    for t in targets {
        let ls = joint(records, sparse, t).expect("target listed from these records");
        let errs: Vec<f64> = records
            .iter()
            .filter(|r| {
                r.sparse == sparse
                    && r.horizon == horizon
                    && r.target == t
                    && r.variable != JOINT_FOCUS
                    && (focus.is_empty() || focus.contains(&r.variable))
            })
            .map(|r| (r.realized - r.mean).powi(2))
            .collect();
        let se = mean(&errs);
        cum_ls += ls;
        cum_se += se;
        let bf = reference.and_then(|(recs, sp)| joint(recs, sp, t)).map(|b| {
            cum_bf += ls - b;
            cum_bf
        });
        out.push(PeriodRow {
            model: records.first().map(|r| r.model.clone()).unwrap_or_default(),
            sparsified: sparse,
            target: t,
            horizon,
            log_score: ls,
            cum_log_score: cum_ls,
            sq_error: se,
            cum_sq_error: cum_se,
            cum_log_bf: bf,
        });
    }
    out
}

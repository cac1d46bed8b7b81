use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dgp::{generate_dgp, DgpConfig, SimulatedRegression, SparsityLevel};
use super::metrics::{evaluate_hit_rate, evaluate_mae};
use crate::dist::RngStream;
use crate::error::{Error, Result};
use crate::models::{fit_tvp_regression, DrawRecord, FnSink, PathQuantileSink, RegressionSpec, SamplerSettings};
use crate::priors::{PriorConfig, PriorKind};

/// The `(K, T, sparsity, prior)` grid of the simulation study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyGrid {
    pub k: Vec<usize>,
    pub t_len: Vec<usize>,
    pub sparsity: Vec<SparsityLevel>,
    pub priors: Vec<PriorKind>,
    pub replications: usize,
}

impl StudyGrid {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::usage("replications must be at least 1"));
        }
        if self.k.is_empty() || self.t_len.is_empty() || self.sparsity.is_empty() || self.priors.is_empty() {
            return Err(Error::usage("every grid dimension needs at least one value"));
        }
        if self.k.contains(&0) || self.t_len.contains(&0) {
            return Err(Error::usage("K and T must be positive"));
        }
        Ok(())
    }

    /// Data configurations in grid order: `(index, K, T, sparsity)`.
    fn designs(&self) -> Vec<(usize, usize, usize, SparsityLevel)> {
        let mut out = Vec::new();
        for &k in &self.k {
            for &t in &self.t_len {
                for &s in &self.sparsity {
                    out.push((out.len(), k, t, s));
                }
            }
        }
        out
    }
}

/// Scores of one fitted replication.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReplicationScore {
    pub mae_raw: f64,
    pub mae_sparse: f64,
    /// `None` when the DGP has no zeros.
    pub hit_rate: Option<f64>,
    pub mh_acceptance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReplicationResult {
    pub k: usize,
    pub t_len: usize,
    pub sparsity: SparsityLevel,
    pub prior: PriorKind,
    pub replication: usize,
    /// Error message if the fit failed.
    pub outcome: std::result::Result<ReplicationScore, String>,
}

/// Fit one dataset and score posterior-median `β` paths (raw and
/// sparsified, from the same chain) and the SAVS hit rate.
pub fn score_replication(
    data: &SimulatedRegression,
    prior: &PriorConfig,
    settings: &SamplerSettings,
    rng: &mut RngStream,
) -> Result<ReplicationScore> {
    let settings = SamplerSettings {
        sparsify: true,
        ..settings.clone()
    };
    let spec = RegressionSpec {
        y: data.y.clone(),
        x: data.x.clone(),
        prior: prior.clone(),
        settings,
    };
    let truth_zero = data.zero_mask();
    let has_zeros = truth_zero.iter().any(|z| *z);
    let mut paths = PathQuantileSink::new(data.y.len(), data.x.ncols());
    let mut hit_sum = 0.0;
    let mut n_hit = 0usize;
    let mut hits = FnSink(|r: &DrawRecord<'_>| {
        if has_zeros {
            let mask = &r.sparsified.expect("sparsification is on").mask;
            hit_sum += evaluate_hit_rate([mask.as_slice()], &truth_zero)?;
            n_hit += 1;
        }
        Ok(())
    });
    let summary = fit_tvp_regression(&spec, rng, &mut (&mut paths, &mut hits))?;
    let q = paths.finish(&[0.5])?;
    let sparse = q.sparse.as_ref().expect("sparsification is on");
    Ok(ReplicationScore {
        mae_raw: evaluate_mae(&q.raw[0], &data.beta)?,
        mae_sparse: evaluate_mae(&sparse[0], &data.beta)?,
        hit_rate: (n_hit > 0).then(|| hit_sum / n_hit as f64),
        mh_acceptance: summary.mh_acceptance,
    })
}

/// Stream for dataset `rep` of design `design`; shared by every prior so
/// all priors see the same data.
pub fn data_stream(seed: u64, design: usize, rep: usize) -> RngStream {
    RngStream::new(seed, 0).derive(design as u64).derive(rep as u64)
}

pub fn mcmc_stream(seed: u64, design: usize, rep: usize, prior: PriorKind) -> RngStream {
    let p = PriorKind::ALL.iter().position(|k| *k == prior).unwrap_or(0);
    RngStream::new(seed, 1).derive(design as u64).derive(rep as u64).derive(p as u64)
}

/// Run every `(design, replication, prior)` job on the current rayon pool.
/// Failed fits are reported in their result rather than aborting the grid.
pub fn run_study(grid: &StudyGrid, settings: &SamplerSettings, seed: u64) -> Result<Vec<ReplicationResult>> {
    grid.validate()?;
    settings.validate()?;
    let mut jobs = Vec::new();
    for (d, k, t, s) in grid.designs() {
        for rep in 0..grid.replications {
            for &prior in &grid.priors {
                jobs.push((d, k, t, s, rep, prior));
            }
        }
    }
    Ok(jobs
        .into_par_iter()
        .map(|(d, k, t_len, sparsity, rep, prior)| {
            let cfg = DgpConfig {
                k,
                t_len,
                sparsity: sparsity.fraction(),
                replications: grid.replications,
                seed,
            };
            let outcome = generate_dgp(&cfg, &mut data_stream(seed, d, rep))
                .and_then(|data| {
                    score_replication(
                        &data,
                        &PriorConfig::new(prior),
                        settings,
                        &mut mcmc_stream(seed, d, rep, prior),
                    )
                })
                .map_err(|e| e.to_string());
            ReplicationResult {
                k,
                t_len,
                sparsity,
                prior,
                replication: rep,
                outcome,
            }
        })
        .collect())
}

/// Averages over replications of one `(K, T, sparsity, prior)` cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSummary {
    pub k: usize,
    pub t_len: usize,
    pub sparsity: SparsityLevel,
    pub prior: PriorKind,
    pub n_ok: usize,
    pub n_failed: usize,
    pub mae_raw: Option<f64>,
    pub mae_sparse: Option<f64>,
    pub hit_rate: Option<f64>,
}

/// Aggregate replication results by cell, in order of first appearance.
pub fn summarize_cells(results: &[ReplicationResult]) -> Vec<CellSummary> {
    let mut keys: Vec<(usize, usize, SparsityLevel, PriorKind)> = Vec::new();
    for r in results {
        let key = (r.k, r.t_len, r.sparsity, r.prior);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(k, t_len, sparsity, prior)| {
            let cell: Vec<&ReplicationResult> = results
                .iter()
                .filter(|r| (r.k, r.t_len, r.sparsity, r.prior) == (k, t_len, sparsity, prior))
                .collect();
            let ok: Vec<&ReplicationScore> = cell.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
            let avg = |f: &dyn Fn(&ReplicationScore) -> Option<f64>| {
                let v: Vec<f64> = ok.iter().filter_map(|s| f(s)).collect();
                (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
            };
            CellSummary {
                k,
                t_len,
                sparsity,
                prior,
                n_ok: ok.len(),
                n_failed: cell.len() - ok.len(),
                mae_raw: avg(&|s| Some(s.mae_raw)),
                mae_sparse: avg(&|s| Some(s.mae_sparse)),
                hit_rate: avg(&|s| s.hit_rate),
            }
        })
        .collect()
}

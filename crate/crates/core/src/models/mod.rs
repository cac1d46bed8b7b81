//! Gibbs samplers for TVP regressions and equation-by-equation TVP-VAR-SV.
//!
//! Samplers push one [`DrawRecord`] per retained sweep into a [`DrawSink`];
//! records borrow the sampler's current state, so sinks copy only what they
//! need and long runs never hold the full posterior in memory.

mod drawfile;
mod forecast;
mod sampler;
mod sinks;
mod var;

pub use drawfile::{DrawTable, DRAW_FILE_MAGIC};
pub use forecast::{
    draw_predictive, log_mean_exp, mvn_ln_pdf, EquationDraw, ForecastSink, PredictiveDraw, VarPosterior, VolDraw,
};
pub use sampler::{EquationSampler, Profile, SamplerSettings};
pub use sinks::{
    sorted_quantile, CollectSink, DrawTableSink, FnSink, PathQuantileSink, PathQuantiles, PipSink, StoredDraw,
};
pub use var::{
    build_var_data, equation_regressors, fit_tvp_var, reduced_form, reconstruct_sigma, VarData, VarSpec,
};

use nalgebra::DMatrix;

use crate::dist::RngStream;
use crate::error::{Error, Result};
use crate::priors::{PriorConfig, PriorState};
use crate::savs::SparsifiedDraw;
use crate::state_space::{CoefBlock, NcParamVector, StateTrajectory};
use crate::stochvol::SvState;

/// Measurement-error variance: constant, or a stochastic-volatility path.
#[derive(Clone, Debug, PartialEq)]
pub enum ErrorVariance {
    Constant(f64),
    Sv(SvState),
}

impl ErrorVariance {
    pub fn variances(&self, t_len: usize) -> Vec<f64> {
        match self {
            ErrorVariance::Constant(s2) => vec![*s2; t_len],
            ErrorVariance::Sv(sv) => sv.variances(),
        }
    }

    pub fn sigma2(&self) -> Option<f64> {
        match self {
            ErrorVariance::Constant(s2) => Some(*s2),
            ErrorVariance::Sv(_) => None,
        }
    }

    pub fn sv(&self) -> Option<&SvState> {
        match self {
            ErrorVariance::Sv(sv) => Some(sv),
            ErrorVariance::Constant(_) => None,
        }
    }
}

/// One retained posterior draw of an equation.
#[derive(Clone, Copy, Debug)]
pub struct DrawRecord<'a> {
    /// Index among retained draws.
    pub iteration: usize,
    pub alpha: &'a NcParamVector,
    /// False for the constant-coefficient benchmark (`α` is `β₀` only).
    pub tvp: bool,
    pub states: &'a StateTrajectory,
    pub variance: &'a ErrorVariance,
    pub sparsified: Option<&'a SparsifiedDraw>,
    pub prior: &'a PriorState,
    pub col_sq_norms: &'a [f64],
}

impl DrawRecord<'_> {
    pub fn alpha_flat(&self) -> Vec<f64> {
        if self.tvp {
            self.alpha.to_flat()
        } else {
            self.alpha.constant.clone()
        }
    }

    /// `(β₀, √v)` from the raw draw or from its sparsified counterpart.
    pub fn coefficients(&self, sparse: bool) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.alpha.n();
        if !sparse {
            return Some((self.alpha.constant.clone(), self.alpha.sqrt_v.clone()));
        }
        let g = &self.sparsified?.gamma_bar;
        let sqrt_v = if self.tvp { g[n..].to_vec() } else { vec![0.0; n] };
        Some((g[..n].to_vec(), sqrt_v))
    }

    /// `β_t = β₀ + √v ⊙ β̃_t`; `None` if a sparsified path is requested
    /// from a run without SAVS.
    pub fn beta_path(&self, sparse: bool) -> Option<DMatrix<f64>> {
        let (b0, sv) = self.coefficients(sparse)?;
        Some(reconstruct_beta_path(&b0, &sv, self.states))
    }
}

/// `β_t = β₀ + √v ⊙ β̃_t` for every `t` (rows) and coefficient (columns).
pub fn reconstruct_beta_path(beta0: &[f64], sqrt_v: &[f64], states: &StateTrajectory) -> DMatrix<f64> {
    DMatrix::from_fn(states.t_len(), beta0.len(), |t, j| beta0[j] + sqrt_v[j] * states.get(t, j))
}

/// Consumer of retained draws.
pub trait DrawSink {
    fn accept(&mut self, record: &DrawRecord<'_>) -> Result<()>;
}

impl<S: DrawSink + ?Sized> DrawSink for &mut S {
    fn accept(&mut self, record: &DrawRecord<'_>) -> Result<()> {
        (**self).accept(record)
    }
}

impl<A: DrawSink, B: DrawSink> DrawSink for (A, B) {
    fn accept(&mut self, record: &DrawRecord<'_>) -> Result<()> {
        self.0.accept(record)?;
        self.1.accept(record)
    }
}

impl<S: DrawSink> DrawSink for Vec<S> {
    fn accept(&mut self, record: &DrawRecord<'_>) -> Result<()> {
        self.iter_mut().try_for_each(|s| s.accept(record))
    }
}

/// Bookkeeping returned by a fit.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FitSummary {
    pub n_kept: usize,
    /// Post-burn-in acceptance rate of the prior's MH step, if it has one.
    pub mh_acceptance: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct RegressionSpec {
    pub y: Vec<f64>,
    pub x: DMatrix<f64>,
    pub prior: PriorConfig,
    pub settings: SamplerSettings,
}

/// Run `sampler` for the configured number of sweeps, adapting MH scales
/// early in burn-in and streaming retained draws into `sink`.
pub fn run_sampler<S: DrawSink + ?Sized>(
    sampler: &mut EquationSampler,
    settings: &SamplerSettings,
    rng: &mut RngStream,
    sink: &mut S,
) -> Result<FitSummary> {
    settings.validate()?;
    let mut kept = 0;
    for it in 0..settings.n_draws {
        sampler.sweep(rng)?;
        if it < settings.n_burn {
            if (it + 1) % 50 == 0 {
                sampler.adapt(it as f64 / settings.n_burn as f64);
            }
            if it + 1 == settings.n_burn {
                sampler.prior.reset_tracker();
            }
        } else if (it - settings.n_burn) % settings.thin == 0 {
            sink.accept(&sampler.record(kept))?;
            kept += 1;
        }
    }
    Ok(FitSummary {
        n_kept: kept,
        mh_acceptance: sampler.prior.mh_acceptance(),
        warnings: Vec::new(),
    })
}

pub fn fit_tvp_regression<S: DrawSink + ?Sized>(
    spec: &RegressionSpec,
    rng: &mut RngStream,
    sink: &mut S,
) -> Result<FitSummary> {
    spec.settings.validate()?;
    if spec.x.nrows() != spec.y.len() {
        return Err(Error::shape(format!(
            "y has {} observations, X has {} rows",
            spec.y.len(),
            spec.x.nrows()
        )));
    }
    let mut sampler = EquationSampler::new(spec.y.clone(), &spec.x, 0, &spec.prior, &spec.settings)?;
    let mut summary = run_sampler(&mut sampler, &spec.settings, rng, sink)?;
    if spec.y.len() <= spec.x.ncols() {
        summary.warnings.push(format!(
            "T = {} does not exceed K = {}; the likelihood alone does not identify the coefficients",
            spec.y.len(),
            spec.x.ncols()
        ));
    }
    Ok(summary)
}

/// Labels and blocks for the coefficient vector of one equation.
///
/// `names` lists the regressors in `W` order; the last `n_cov` are
/// contemporaneous terms.
pub fn coef_labels(names: &[String], n_cov: usize, tvp: bool) -> Vec<(String, CoefBlock)> {
    let nb = names.len() - n_cov;
    let mut out: Vec<(String, CoefBlock)> = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            if j < nb {
                (format!("beta0:{name}"), CoefBlock::Constant)
            } else {
                (format!("u0:{name}"), CoefBlock::CovConstant)
            }
        })
        .collect();
    if tvp {
        out.extend(names.iter().enumerate().map(|(j, name)| {
            if j < nb {
                (format!("sqrt_v:{name}"), CoefBlock::TvLoading)
            } else {
                (format!("sqrt_vu:{name}"), CoefBlock::CovLoading)
            }
        }));
    }
    out
}

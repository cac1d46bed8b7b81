//! Global-local shrinkage priors on the constant block `α`.
//!
//! Each prior keeps its latent hyperparameters in a state object with an
//! `update` method (one Gibbs/MH sweep given the current `α`) and exposes the
//! diagonal prior variance `Ω̲` used by the Gaussian `α` update.

mod dl;
mod hs;
mod ng;
mod nmig;

pub use dl::DlState;
pub use hs::HsState;
pub use ng::{NgHyper, NgState};
pub use nmig::{nmig_inclusion_probability, NmigHyper, NmigState};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Lower bound on every prior variance entry.
pub const PRIOR_VARIANCE_FLOOR: f64 = 1e-12;
/// Lower bound on `|α_j|` inside reciprocal-type conditionals.
pub const ALPHA_ABS_FLOOR: f64 = 1e-10;

/// End of the adaptation window, as a fraction of burn-in.
pub const ADAPT_WINDOW: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorKind {
    Dl,
    Ng,
    Lasso,
    Hs,
    Nmig,
    Flat,
}

impl PriorKind {
    pub const ALL: [PriorKind; 6] = [
        PriorKind::Flat,
        PriorKind::Dl,
        PriorKind::Lasso,
        PriorKind::Ng,
        PriorKind::Hs,
        PriorKind::Nmig,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PriorKind::Dl => "dl",
            PriorKind::Ng => "ng",
            PriorKind::Lasso => "lasso",
            PriorKind::Hs => "hs",
            PriorKind::Nmig => "nmig",
            PriorKind::Flat => "flat",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str().eq_ignore_ascii_case(s))
    }
}

impl std::fmt::Display for PriorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorConfig {
    pub kind: PriorKind,
    pub ng: NgHyper,
    pub nmig: NmigHyper,
    pub flat_variance: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            kind: PriorKind::Dl,
            ng: NgHyper::default(),
            nmig: NmigHyper::default(),
            flat_variance: 10.0,
        }
    }
}

impl PriorConfig {
    pub fn new(kind: PriorKind) -> Self {
        Self { kind, ..Self::default() }
    }

    /// NG hyperparameters with `ϑ` pinned to 1 for the Lasso.
    pub fn ng_hyper(&self) -> NgHyper {
        let mut h = self.ng.clone();
        if self.kind == PriorKind::Lasso {
            h.fixed_theta = Some(1.0);
        }
        h
    }
}

/// Diagonal of the prior covariance `Ω̲`.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorVariance {
    pub diag: Vec<f64>,
}

impl PriorVariance {
    pub fn from_raw(raw: impl IntoIterator<Item = f64>) -> Self {
        Self {
            diag: raw
                .into_iter()
                .map(|v| if v.is_nan() { PRIOR_VARIANCE_FLOOR } else { v.max(PRIOR_VARIANCE_FLOOR) })
                .collect(),
        }
    }
}

/// Proposal-scale rule: grow by 10% above 40% acceptance, shrink by 10%
/// below 20%, and freeze once `phase` (fraction of burn-in) reaches 0.2.
pub fn adapt_mh_scale(scale: f64, acc_rate: f64, phase: f64) -> f64 {
    if phase >= ADAPT_WINDOW {
        scale
    } else if acc_rate > 0.4 {
        scale * 1.1
    } else if acc_rate < 0.2 {
        scale * 0.9
    } else {
        scale
    }
}

/// Acceptance bookkeeping for a random-walk MH step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MhTracker {
    pub accepted: u32,
    pub proposed: u32,
}

impl MhTracker {
    pub fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += u32::from(accepted);
    }

    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            f64::from(self.accepted) / f64::from(self.proposed)
        }
    }

    pub fn adapt(&mut self, scale: &mut f64, phase: f64) {
        if self.proposed > 0 {
            *scale = adapt_mh_scale(*scale, self.rate(), phase);
        }
        *self = Self::default();
    }
}

/// Latent state of whichever prior is in use.
#[derive(Clone, Debug, PartialEq)]
pub enum PriorState {
    Dl(DlState),
    Ng(NgState),
    Hs(HsState),
    Nmig(NmigState),
    Flat { dim: usize, variance: f64 },
}

impl PriorState {
    /// Starting values for a coefficient block of length `dim`.
    pub fn new(config: &PriorConfig, dim: usize) -> Self {
        match config.kind {
            PriorKind::Dl => PriorState::Dl(DlState::new(dim)),
            PriorKind::Ng | PriorKind::Lasso => PriorState::Ng(NgState::new(dim, config.ng_hyper())),
            PriorKind::Hs => PriorState::Hs(HsState::new(dim)),
            PriorKind::Nmig => PriorState::Nmig(NmigState::new(dim, config.nmig.clone())),
            PriorKind::Flat => PriorState::Flat {
                dim,
                variance: config.flat_variance,
            },
        }
    }

    /// Draw the hyperparameters from their prior (used by joint-distribution tests).
    pub fn sample_prior<R: Rng + ?Sized>(config: &PriorConfig, dim: usize, rng: &mut R) -> Result<Self> {
        Ok(match config.kind {
            PriorKind::Dl => PriorState::Dl(DlState::sample_prior(dim, rng)?),
            PriorKind::Ng | PriorKind::Lasso => PriorState::Ng(NgState::sample_prior(dim, config.ng_hyper(), rng)?),
            PriorKind::Hs => PriorState::Hs(HsState::sample_prior(dim, rng)?),
            PriorKind::Nmig => PriorState::Nmig(NmigState::sample_prior(dim, config.nmig.clone(), rng)?),
            PriorKind::Flat => PriorState::new(config, dim),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            PriorState::Dl(s) => s.omega.len(),
            PriorState::Ng(s) => s.phi.len(),
            PriorState::Hs(s) => s.phi.len(),
            PriorState::Nmig(s) => s.delta.len(),
            PriorState::Flat { dim, .. } => *dim,
        }
    }

    pub fn update<R: Rng + ?Sized>(&mut self, alpha: &[f64], rng: &mut R) -> Result<()> {
        match self {
            PriorState::Dl(s) => s.update(alpha, rng),
            PriorState::Ng(s) => s.update(alpha, rng),
            PriorState::Hs(s) => s.update(alpha, rng),
            PriorState::Nmig(s) => s.update(alpha, rng),
            PriorState::Flat { .. } => Ok(()),
        }
    }

    pub fn variance(&self) -> PriorVariance {
        match self {
            PriorState::Dl(s) => s.variance(),
            PriorState::Ng(s) => s.variance(),
            PriorState::Hs(s) => s.variance(),
            PriorState::Nmig(s) => s.variance(),
            PriorState::Flat { dim, variance } => PriorVariance::from_raw(std::iter::repeat(*variance).take(*dim)),
        }
    }

    /// Apply the proposal-scale rule to any MH step and reset its counters.
    pub fn adapt(&mut self, phase: f64) {
        match self {
            PriorState::Dl(s) => s.tracker.adapt(&mut s.mh_scale, phase),
            PriorState::Ng(s) => s.tracker.adapt(&mut s.mh_scale, phase),
            _ => {}
        }
    }

    fn tracker(&self) -> Option<&MhTracker> {
        match self {
            PriorState::Dl(s) => Some(&s.tracker),
            PriorState::Ng(s) if !s.is_lasso() => Some(&s.tracker),
            _ => None,
        }
    }

    /// Acceptance rate of the MH step since the last reset, if there is one.
    pub fn mh_acceptance(&self) -> Option<f64> {
        self.tracker().filter(|t| t.proposed > 0).map(MhTracker::rate)
    }

    pub fn reset_tracker(&mut self) {
        match self {
            PriorState::Dl(s) => s.tracker = MhTracker::default(),
            PriorState::Ng(s) => s.tracker = MhTracker::default(),
            _ => {}
        }
    }

    /// The top-level (global) shrinkage quantity: ζ (DL), λ̃ (NG/Lasso),
    /// λ (HS), p̲ (NMIG). `None` for the flat prior.
    pub fn global_scale(&self) -> Option<f64> {
        match self {
            PriorState::Dl(s) => Some(s.zeta),
            PriorState::Ng(s) => Some(s.lam_tilde),
            PriorState::Hs(s) => Some(s.lam),
            PriorState::Nmig(s) => Some(s.p_incl),
            PriorState::Flat { .. } => None,
        }
    }
}

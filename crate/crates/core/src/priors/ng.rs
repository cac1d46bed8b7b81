use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{MhTracker, PriorVariance, ALPHA_ABS_FLOOR};
use crate::dist::{gamma, gamma_ln_pdf, sample_gig, std_normal, GigParams};
use crate::error::{Error, Result};

/// Fixed hyperparameters of the Normal-Gamma prior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NgHyper {
    /// `λ̃ ~ Gamma(d_lambda, e_lambda)`.
    pub d_lambda: f64,
    pub e_lambda: f64,
    /// Rate of the exponential prior on `ϑ`.
    pub theta_rate: f64,
    /// Pin `ϑ` instead of sampling it (`Some(1.0)` is the Bayesian Lasso).
    pub fixed_theta: Option<f64>,
}

impl Default for NgHyper {
    fn default() -> Self {
        Self {
            d_lambda: 1e-4,
            e_lambda: 1e-4,
            theta_rate: 1.0,
            fixed_theta: None,
        }
    }
}

/// Normal-Gamma hyperparameters: `α_j ~ N(0, φ_j)`,
/// `φ_j ~ Gamma(ϑ, ϑλ̃/2)`, `λ̃ ~ Gamma(d, e)`, `ϑ ~ Exp(1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NgState {
    pub phi: Vec<f64>,
    pub lam_tilde: f64,
    pub theta: f64,
    pub mh_scale: f64,
    pub hyper: NgHyper,
    pub tracker: MhTracker,
}

impl NgState {
    pub fn new(n: usize, hyper: NgHyper) -> Self {
        Self {
            phi: vec![1.0; n],
            lam_tilde: 1.0,
            theta: hyper.fixed_theta.unwrap_or(0.1),
            mh_scale: 0.2,
            hyper,
            tracker: MhTracker::default(),
        }
    }

    pub fn is_lasso(&self) -> bool {
        self.hyper.fixed_theta == Some(1.0)
    }

    pub fn sample_prior<R: Rng + ?Sized>(n: usize, hyper: NgHyper, rng: &mut R) -> Result<Self> {
        let mut s = Self::new(n, hyper);
        if s.hyper.fixed_theta.is_none() {
            s.theta = gamma(1.0, s.hyper.theta_rate, rng)?;
        }
        s.lam_tilde = gamma(s.hyper.d_lambda, s.hyper.e_lambda, rng)?;
        let rate = s.theta * s.lam_tilde / 2.0;
        for p in s.phi.iter_mut() {
            *p = gamma(s.theta, rate, rng)?;
        }
        Ok(s)
    }

    pub fn update<R: Rng + ?Sized>(&mut self, alpha: &[f64], rng: &mut R) -> Result<()> {
        if alpha.len() != self.phi.len() {
            return Err(Error::shape(format!(
                "NG state has {} coefficients, alpha has {}",
                self.phi.len(),
                alpha.len()
            )));
        }
        for (p, &a) in self.phi.iter_mut().zip(alpha) {
            *p = sample_gig(&phi_conditional(self.theta, self.lam_tilde, a)?, rng)?;
        }
        let (shape, rate) = lambda_conditional(&self.hyper, self.theta, &self.phi);
        self.lam_tilde = gamma(shape, rate, rng)?;
        if self.hyper.fixed_theta.is_none() {
            self.update_theta(rng);
        }
        Ok(())
    }

    /// Random walk on `log ϑ`; the target carries the Jacobian term `log ϑ`.
    fn update_theta<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let prop = self.theta * (self.mh_scale * std_normal(rng)).exp();
        let log_acc = self.log_target_theta(prop) - self.log_target_theta(self.theta);
        let accept = log_acc.is_finite() && rng.gen::<f64>().ln() < log_acc;
        if accept {
            self.theta = prop;
        }
        self.tracker.record(accept);
    }

    fn log_target_theta(&self, theta: f64) -> f64 {
        let rate = theta * self.lam_tilde / 2.0;
        let lik: f64 = self.phi.iter().map(|&p| gamma_ln_pdf(p, theta, rate)).sum();
        lik - self.hyper.theta_rate * theta + theta.ln()
    }

    pub fn variance(&self) -> PriorVariance {
        PriorVariance::from_raw(self.phi.iter().copied())
    }
}

/// `φ_j | λ̃, α_j ~ GIG(ϑ − 1/2, ϑλ̃, α_j²)`.
fn phi_conditional(theta: f64, lam_tilde: f64, alpha: f64) -> Result<GigParams> {
    let a2 = alpha.abs().max(ALPHA_ABS_FLOOR).powi(2);
    GigParams::new(theta - 0.5, theta * lam_tilde, a2)
}

/// `λ̃ | φ ~ Gamma(d + ϑn, e + ϑ/2 Σφ_j)`, as (shape, rate).
fn lambda_conditional(hyper: &NgHyper, theta: f64, phi: &[f64]) -> (f64, f64) {
    let n = phi.len() as f64;
    (
        hyper.d_lambda + theta * n,
        hyper.e_lambda + theta / 2.0 * phi.iter().sum::<f64>(),
    )
}

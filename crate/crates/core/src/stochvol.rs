//! AR(1) stochastic volatility via the 10-component auxiliary mixture.
//!
//! With `y*_t = log(ε_t² + c)` the measurement equation becomes
//! `y*_t = h_t + log χ²₁`, and the log χ²₁ error is replaced by a Gaussian
//! mixture with known weights, means and variances (Omori et al., 2007).
//! Conditional on the mixture indicators the model is linear Gaussian in
//! `h₁:T`, which is drawn jointly by a scalar FFBS.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{
    normal, sample_gig, sample_truncated_normal, std_normal, GigParams, StandardDist,
};
use crate::error::{Error, Result};

/// Offset inside `log(ε² + offset)`.
pub const SV_OFFSET: f64 = 1e-8;

pub const MIX_PROB: [f64; 10] = [
    0.00609, 0.04775, 0.13057, 0.20674, 0.22715, 0.18842, 0.12047, 0.05591, 0.01575, 0.00115,
];
pub const MIX_MEAN: [f64; 10] = [
    1.92677, 1.34744, 0.73504, 0.02266, -0.85173, -1.97278, -3.46788, -5.55246, -8.68384, -14.65,
];
pub const MIX_VAR: [f64; 10] = [
    0.11265, 0.17788, 0.26768, 0.40611, 0.62699, 0.98583, 1.57469, 2.54498, 4.16591, 7.33342,
];

/// Priors: `μ ~ N(mu_mean, mu_var)`, `(ρ + 1)/2 ~ Beta(rho_a, rho_b)`,
/// `σ_η² ~ Gamma(1/2, 1/(2·sig_scale))`, i.e. `±σ_η ~ N(0, sig_scale)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvPrior {
    pub mu_mean: f64,
    pub mu_var: f64,
    pub rho_a: f64,
    pub rho_b: f64,
    pub sig_scale: f64,
}

impl Default for SvPrior {
    fn default() -> Self {
        Self {
            mu_mean: 0.0,
            mu_var: 100.0,
            rho_a: 25.0,
            rho_b: 5.0,
            sig_scale: 1.0,
        }
    }
}

impl SvPrior {
    /// Draw `(μ, ρ, σ_η²)` from the prior.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(f64, f64, f64)> {
        let mu = normal(self.mu_mean, self.mu_var.sqrt(), rng);
        let b = StandardDist::Beta { a: self.rho_a, b: self.rho_b }.sample(rng)?;
        let rho = (2.0 * b - 1.0).clamp(-1.0 + 1e-12, 1.0 - 1e-12);
        let s = std_normal(rng);
        Ok((mu, rho, self.sig_scale * s * s))
    }

    fn ln_rho_prior(&self, rho: f64) -> f64 {
        (self.rho_a - 1.0) * (1.0 + rho).ln() + (self.rho_b - 1.0) * (1.0 - rho).ln()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvState {
    pub h: Vec<f64>,
    pub mu: f64,
    pub rho: f64,
    pub sig_eta2: f64,
    pub mix_ind: Vec<u8>,
}

impl SvState {
    pub fn new(t_len: usize) -> Self {
        Self {
            h: vec![0.0; t_len],
            mu: 0.0,
            rho: 0.9,
            sig_eta2: 0.1,
            mix_ind: vec![4; t_len],
        }
    }

    /// Start at the log of the mean squared residual.
    pub fn from_residuals(residuals: &[f64]) -> Self {
        let n = residuals.len().max(1) as f64;
        let ms = residuals.iter().map(|e| e * e).sum::<f64>() / n;
        let level = (ms + SV_OFFSET).ln();
        let mut s = Self::new(residuals.len());
        s.h.fill(level);
        s.mu = level;
        s
    }

    pub fn t_len(&self) -> usize {
        self.h.len()
    }

    /// Error variances `exp(h_t)`.
    pub fn variances(&self) -> Vec<f64> {
        self.h.iter().map(|h| h.exp()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho.abs() < 1.0) || !(self.sig_eta2 > 0.0) || !self.mu.is_finite() {
            return Err(Error::domain(format!(
                "invalid SV parameters: mu={}, rho={}, sig_eta2={}",
                self.mu, self.rho, self.sig_eta2
            )));
        }
        Ok(())
    }
}

pub fn log_squared(residuals: &[f64]) -> Vec<f64> {
    residuals.iter().map(|e| (e * e + SV_OFFSET).ln()).collect()
}

/// Mean and variance of the mixture approximation to log χ²₁.
pub fn mixture_moments() -> (f64, f64) {
    let mean: f64 = (0..10).map(|k| MIX_PROB[k] * MIX_MEAN[k]).sum();
    let second: f64 = (0..10).map(|k| MIX_PROB[k] * (MIX_VAR[k] + MIX_MEAN[k] * MIX_MEAN[k])).sum();
    (mean, second - mean * mean)
}

/// One full sweep given measurement residuals.
pub fn sv_sweep<R: Rng + ?Sized>(
    residuals: &[f64],
    state: &mut SvState,
    prior: &SvPrior,
    rng: &mut R,
) -> Result<()> {
    sv_sweep_linearized(&log_squared(residuals), state, prior, rng)
}

/// One full sweep given `y*_t = log(ε_t² + c)` directly.
pub fn sv_sweep_linearized<R: Rng + ?Sized>(
    ystar: &[f64],
    state: &mut SvState,
    prior: &SvPrior,
    rng: &mut R,
) -> Result<()> {
    if ystar.len() != state.t_len() {
        return Err(Error::shape(format!(
            "SV state has {} periods, data has {}",
            state.t_len(),
            ystar.len()
        )));
    }
    sample_mixture_indicators(ystar, state, rng);
    sample_h_path(ystar, state, rng)?;
    sample_sv_params(state, prior, rng)
}

pub fn sample_mixture_indicators<R: Rng + ?Sized>(ystar: &[f64], state: &mut SvState, rng: &mut R) {
    let mut w = [0.0; 10];
    for (t, (&y, &h)) in ystar.iter().zip(&state.h).enumerate() {
        let d = y - h;
        let mut best = f64::NEG_INFINITY;
        for k in 0..10 {
            let r = d - MIX_MEAN[k];
            w[k] = MIX_PROB[k].ln() - 0.5 * MIX_VAR[k].ln() - 0.5 * r * r / MIX_VAR[k];
            best = best.max(w[k]);
        }
        let mut total = 0.0;
        for wk in w.iter_mut() {
            *wk = (*wk - best).exp();
            total += *wk;
        }
        let mut u = rng.gen::<f64>() * total;
        let mut k = 9;
        for (j, wk) in w.iter().enumerate() {
            if u < *wk {
                k = j;
                break;
            }
            u -= wk;
        }
        state.mix_ind[t] = k as u8;
    }
}

/// Joint draw of `h₁:T` given indicators and `(μ, ρ, σ_η²)`.
pub fn sample_h_path<R: Rng + ?Sized>(ystar: &[f64], state: &mut SvState, rng: &mut R) -> Result<()> {
    state.validate()?;
    let n = ystar.len();
    if n == 0 {
        return Ok(());
    }
    let (mu, rho, s2) = (state.mu, state.rho, state.sig_eta2);
    let mut m = vec![0.0; n];
    let mut c = vec![0.0; n];
    let mut a = mu;
    let mut p = s2 / (1.0 - rho * rho);
    for t in 0..n {
        let k = state.mix_ind[t] as usize;
        let obs = ystar[t] - MIX_MEAN[k];
        let r = MIX_VAR[k];
        let gain = p / (p + r);
        m[t] = a + gain * (obs - a);
        c[t] = p * r / (p + r);
        a = mu + rho * (m[t] - mu);
        p = rho * rho * c[t] + s2;
    }
    state.h[n - 1] = m[n - 1] + c[n - 1].sqrt() * std_normal(rng);
    for t in (0..n - 1).rev() {
        let pred_var = rho * rho * c[t] + s2;
        let pred_mean = mu + rho * (m[t] - mu);
        let mean = m[t] + c[t] * rho / pred_var * (state.h[t + 1] - pred_mean);
        let var = c[t] * s2 / pred_var;
        state.h[t] = mean + var.max(0.0).sqrt() * std_normal(rng);
    }
    if state.h.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::numerical("log-volatility path is not finite"))
    }
}

/// `(ρ, μ, σ_η²)` given the path `h`.
pub fn sample_sv_params<R: Rng + ?Sized>(state: &mut SvState, prior: &SvPrior, rng: &mut R) -> Result<()> {
    let n = state.h.len();
    if n == 0 {
        return Ok(());
    }
    sample_rho(state, prior, rng)?;
    sample_mu(state, prior, rng);

    let (mu, rho) = (state.mu, state.rho);
    let h = &state.h;
    let mut ss = (1.0 - rho * rho) * (h[0] - mu).powi(2);
    for t in 1..n {
        ss += (h[t] - mu - rho * (h[t - 1] - mu)).powi(2);
    }
    // prior (σ²)^{-1/2} e^{-σ²/(2B)} times likelihood (σ²)^{-n/2} e^{-ss/(2σ²)}
    let params = GigParams::new((1.0 - n as f64) / 2.0, 1.0 / prior.sig_scale, ss.max(1e-12))?;
    state.sig_eta2 = sample_gig(&params, rng)?;
    Ok(())
}

fn sample_mu<R: Rng + ?Sized>(state: &mut SvState, prior: &SvPrior, rng: &mut R) {
    let (rho, s2, h) = (state.rho, state.sig_eta2, &state.h);
    let mut prec = 1.0 / prior.mu_var + (1.0 - rho * rho) / s2;
    let mut num = prior.mu_mean / prior.mu_var + (1.0 - rho * rho) * h[0] / s2;
    for t in 1..h.len() {
        prec += (1.0 - rho) * (1.0 - rho) / s2;
        num += (1.0 - rho) * (h[t] - rho * h[t - 1]) / s2;
    }
    state.mu = num / prec + std_normal(rng) / prec.sqrt();
}

/// Independence MH: a truncated normal built from the AR regression on
/// `t ≥ 2`, corrected by the prior and the stationary initial density.
fn sample_rho<R: Rng + ?Sized>(state: &mut SvState, prior: &SvPrior, rng: &mut R) -> Result<()> {
    let (mu, s2) = (state.mu, state.sig_eta2);
    let x: Vec<f64> = state.h.iter().map(|h| h - mu).collect();
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for t in 1..x.len() {
        sxy += x[t] * x[t - 1];
        sxx += x[t - 1] * x[t - 1];
    }
    if !(sxx > 1e-300) {
        return Ok(());
    }
    let bound = 1.0 - 1e-10;
    let prop = sample_truncated_normal(sxy / sxx, (s2 / sxx).sqrt(), -bound, bound, rng)?;
    let ln_rest = |rho: f64| {
        let q = 1.0 - rho * rho;
        prior.ln_rho_prior(rho) + 0.5 * q.ln() - 0.5 * q * x[0] * x[0] / s2
    };
    if rng.gen::<f64>().ln() < ln_rest(prop) - ln_rest(state.rho) {
        state.rho = prop;
    }
    Ok(())
}

/// Simulate an AR(1) log-volatility path from its stationary start.
pub fn simulate_h<R: Rng + ?Sized>(t_len: usize, mu: f64, rho: f64, sig_eta2: f64, rng: &mut R) -> Vec<f64> {
    let mut h = Vec::with_capacity(t_len);
    let sd = sig_eta2.sqrt();
    let mut prev = mu + (sig_eta2 / (1.0 - rho * rho)).sqrt() * std_normal(rng);
    for t in 0..t_len {
        if t > 0 {
            prev = mu + rho * (prev - mu) + sd * std_normal(rng);
        }
        h.push(prev);
    }
    h
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolForecast {
    /// Draw future log-volatilities from the AR(1).
    #[default]
    Simulate,
    /// Hold `h` at its last in-sample value.
    Freeze,
}

/// `h_{T+1..T+horizon}` given the state at `T`.
pub fn sv_forecast<R: Rng + ?Sized>(state: &SvState, horizon: usize, mode: VolForecast, rng: &mut R) -> Vec<f64> {
    let last = state.h.last().copied().unwrap_or(state.mu);
    match mode {
        VolForecast::Freeze => vec![last; horizon],
        VolForecast::Simulate => {
            let sd = state.sig_eta2.max(0.0).sqrt();
            let mut prev = last;
            (0..horizon)
                .map(|_| {
                    prev = state.mu + state.rho * (prev - state.mu) + sd * std_normal(rng);
                    prev
                })
                .collect()
        }
    }
}

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DrawRecord, ErrorVariance};
use crate::dist::inv_gamma;
use crate::error::{Error, Result};
use crate::linalg::draw_from_precision;
use crate::priors::{PriorConfig, PriorState};
use crate::savs::{savs_sparsify, SparsifiedDraw};
use crate::state_space::{draw_states_into, FfbsWorkspace, NcParamVector, StateSampler, StateTrajectory};
use crate::stochvol::{sv_sweep, SvPrior, SvState};

/// Length of the MCMC run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// 30,000 sweeps, first 15,000 discarded.
    Paper,
    /// 5,000 sweeps, first 2,000 discarded.
    Desk,
}

impl Profile {
    /// `(n_draws, n_burn)`.
    pub fn lengths(&self) -> (usize, usize) {
        match self {
            Profile::Paper => (30_000, 15_000),
            Profile::Desk => (5_000, 2_000),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSettings {
    /// Total sweeps, burn-in included.
    pub n_draws: usize,
    pub n_burn: usize,
    pub thin: usize,
    pub sparsify: bool,
    /// Drop the time-varying part: `α` is the constant block only.
    pub tvp_off: bool,
    pub sv: bool,
    /// `σ² ~ IG(sigma_shape, sigma_scale)` when `sv` is off.
    pub sigma_shape: f64,
    pub sigma_scale: f64,
    pub sv_prior: SvPrior,
    pub state_sampler: StateSampler,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        let (n_draws, n_burn) = Profile::Paper.lengths();
        Self {
            n_draws,
            n_burn,
            thin: 1,
            sparsify: true,
            tvp_off: false,
            sv: false,
            sigma_shape: 0.01,
            sigma_scale: 0.01,
            sv_prior: SvPrior::default(),
            state_sampler: StateSampler::default(),
        }
    }
}

impl SamplerSettings {
    pub fn with_profile(mut self, profile: Profile) -> Self {
        (self.n_draws, self.n_burn) = profile.lengths();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_burn >= self.n_draws {
            return Err(Error::usage(format!(
                "burn-in ({}) must be smaller than the number of draws ({})",
                self.n_burn, self.n_draws
            )));
        }
        if self.thin == 0 {
            return Err(Error::usage("thin must be at least 1"));
        }
        if !(self.sigma_shape > 0.0 && self.sigma_scale > 0.0) {
            return Err(Error::usage("sigma prior parameters must be positive"));
        }
        Ok(())
    }

    /// Number of records emitted after burn-in and thinning.
    pub fn n_kept(&self) -> usize {
        (self.n_draws - self.n_burn).div_ceil(self.thin)
    }
}

/// Gibbs sampler for one (TVP) regression equation `y = α'Z + ε`.
///
/// The regressor matrix `W` already contains any contemporaneous terms;
/// `n_cov` only affects labelling and the split of `α`.
#[derive(Clone, Debug)]
pub struct EquationSampler {
    y: Vec<f64>,
    n: usize,
    settings: SamplerSettings,
    pub alpha: NcParamVector,
    pub states: StateTrajectory,
    pub variance: ErrorVariance,
    pub prior: PriorState,
    obs_var: Vec<f64>,
    ws: FfbsWorkspace,
    z: DMatrix<f64>,
    norms: Vec<f64>,
    sparse: Option<SparsifiedDraw>,
    resid: Vec<f64>,
}

impl EquationSampler {
    pub fn new(
        y: Vec<f64>,
        w: &DMatrix<f64>,
        n_cov: usize,
        prior: &PriorConfig,
        settings: &SamplerSettings,
    ) -> Result<Self> {
        let (t_len, n) = w.shape();
        if y.len() != t_len {
            return Err(Error::shape(format!("y has {} rows, regressors have {t_len}", y.len())));
        }
        if n == 0 || t_len == 0 {
            return Err(Error::shape("empty regression"));
        }
        if y.iter().chain(w.iter()).any(|v| !v.is_finite()) {
            return Err(Error::data("non-finite value in regression data"));
        }
        let tvp = !settings.tvp_off;
        let d = if tvp { 2 * n } else { n };
        let mut ws = FfbsWorkspace::default();
        ws.set_regressors(w);

        let mean = y.iter().sum::<f64>() / t_len as f64;
        let var = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t_len as f64).max(1e-8);
        let variance = if settings.sv {
            let centered: Vec<f64> = y.iter().map(|v| v - mean).collect();
            ErrorVariance::Sv(SvState::from_residuals(&centered))
        } else {
            ErrorVariance::Constant(var)
        };
        let sqrt_v = if tvp { vec![0.1; n] } else { vec![0.0; n] };
        let mut s = Self {
            y,
            n,
            settings: settings.clone(),
            alpha: NcParamVector::new(vec![0.0; n], sqrt_v, n_cov)?,
            states: StateTrajectory::zeros(t_len, n),
            obs_var: variance.variances(t_len),
            variance,
            prior: PriorState::new(prior, d),
            ws,
            z: DMatrix::zeros(t_len, d),
            norms: vec![0.0; d],
            sparse: None,
            resid: vec![0.0; t_len],
        };
        s.refresh_design();
        Ok(s)
    }

    pub fn t_len(&self) -> usize {
        self.y.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Length of the coefficient vector handled by the prior and SAVS.
    pub fn dim(&self) -> usize {
        self.z.ncols()
    }

    pub fn tvp(&self) -> bool {
        !self.settings.tvp_off
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn set_y(&mut self, y: Vec<f64>) -> Result<()> {
        if y.len() != self.y.len() {
            return Err(Error::shape("replacement data has a different length"));
        }
        self.y = y;
        Ok(())
    }

    /// The coefficient vector in the order used by the prior: the constant
    /// block, then (with time variation) the `±√v` block.
    pub fn alpha_flat(&self) -> Vec<f64> {
        if self.tvp() {
            self.alpha.to_flat()
        } else {
            self.alpha.constant.clone()
        }
    }

    pub fn set_alpha_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.dim() {
            return Err(Error::shape(format!("alpha has {} entries, expected {}", flat.len(), self.dim())));
        }
        let n = self.n;
        self.alpha.constant.copy_from_slice(&flat[..n]);
        if self.tvp() {
            self.alpha.sqrt_v.copy_from_slice(&flat[n..]);
        }
        Ok(())
    }

    pub fn set_states(&mut self, states: StateTrajectory) -> Result<()> {
        if states.t_len() != self.t_len() || states.n() != self.n {
            return Err(Error::shape("state trajectory has the wrong shape"));
        }
        self.states = states;
        self.refresh_design();
        Ok(())
    }

    pub fn set_variance(&mut self, variance: ErrorVariance) {
        self.obs_var = variance.variances(self.t_len());
        self.variance = variance;
    }

    pub fn col_sq_norms(&self) -> &[f64] {
        &self.norms
    }

    /// Fitted values `α'Z_t` at the current draw.
    pub fn fitted(&self) -> Vec<f64> {
        let a = self.alpha_flat();
        (0..self.t_len())
            .map(|t| (0..a.len()).map(|j| self.z[(t, j)] * a[j]).sum())
            .collect()
    }

    /// Simulate data from the observation equation at the current draw.
    pub fn simulate_y<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.fitted()
            .into_iter()
            .zip(&self.obs_var)
            .map(|(m, v)| m + v.sqrt() * crate::dist::std_normal(rng))
            .collect()
    }

    fn refresh_design(&mut self) {
        let (t_len, n) = (self.t_len(), self.n);
        let w = self.ws.w_rows();
        self.norms.fill(0.0);
        for t in 0..t_len {
            let s = self.states.row(t);
            for j in 0..n {
                let wt = w[t * n + j];
                self.z[(t, j)] = wt;
                self.norms[j] += wt * wt;
                if !self.settings.tvp_off {
                    let zt = s[j] * wt;
                    self.z[(t, n + j)] = zt;
                    self.norms[n + j] += zt * zt;
                }
            }
        }
    }

    /// One full sweep: states, error variance, `α`, prior, then SAVS.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        if self.tvp() {
            draw_states_into(
                self.settings.state_sampler,
                &self.y,
                &self.alpha,
                &self.obs_var,
                &mut self.ws,
                &mut self.states,
                rng,
            )?;
            self.refresh_design();
        }
        self.draw_variance(rng)?;
        self.draw_alpha(rng)?;
        let flat = self.alpha_flat();
        self.prior.update(&flat, rng)?;
        if self.settings.sparsify {
            self.sparse = Some(savs_sparsify(&flat, &self.norms)?);
        }
        Ok(())
    }

    fn draw_variance<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let fitted = self.fitted();
        for ((r, y), f) in self.resid.iter_mut().zip(&self.y).zip(&fitted) {
            *r = y - f;
        }
        match &mut self.variance {
            ErrorVariance::Constant(s2) => {
                let ssr: f64 = self.resid.iter().map(|r| r * r).sum();
                let t_len = self.resid.len() as f64;
                *s2 = inv_gamma(
                    self.settings.sigma_shape + t_len / 2.0,
                    self.settings.sigma_scale + ssr / 2.0,
                    rng,
                )?;
                self.obs_var.fill(*s2);
            }
            ErrorVariance::Sv(sv) => {
                sv_sweep(&self.resid, sv, &self.settings.sv_prior, rng)?;
                for (o, h) in self.obs_var.iter_mut().zip(&sv.h) {
                    *o = h.exp().max(1e-300);
                }
            }
        }
        Ok(())
    }

    fn draw_alpha<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let (post_prec, rhs) = self.posterior_precision();
        let mut prec = post_prec;
        let draw = draw_from_precision(prec.as_mut_slice(), &rhs, self.dim(), rng)?;
        if draw.iter().any(|a| !a.is_finite()) {
            return Err(Error::numerical("non-finite coefficient draw"));
        }
        self.set_alpha_flat(&draw)
    }

    /// `(Z'Λ Z + Ω̲⁻¹, Z'Λ y)` with `Λ = diag(1/σ_t²)`.
    pub fn posterior_precision(&self) -> (DMatrix<f64>, Vec<f64>) {
        let d = self.dim();
        let mut zw = self.z.clone();
        let mut yw = vec![0.0; self.t_len()];
        for t in 0..self.t_len() {
            let s = 1.0 / self.obs_var[t].sqrt();
            for j in 0..d {
                zw[(t, j)] *= s;
            }
            yw[t] = self.y[t] * s;
        }
        let mut prec = zw.tr_mul(&zw);
        let var = self.prior.variance();
        for j in 0..d {
            prec[(j, j)] += 1.0 / var.diag[j];
        }
        let yv = nalgebra::DVector::from_vec(yw);
        let rhs = zw.tr_mul(&yv);
        (prec, rhs.iter().copied().collect())
    }

    pub fn adapt(&mut self, phase: f64) {
        self.prior.adapt(phase);
    }

    pub fn sparsified(&self) -> Option<&SparsifiedDraw> {
        self.sparse.as_ref()
    }

    pub fn record(&self, iteration: usize) -> DrawRecord<'_> {
        DrawRecord {
            iteration,
            alpha: &self.alpha,
            tvp: self.tvp(),
            states: &self.states,
            variance: &self.variance,
            sparsified: self.sparse.as_ref(),
            prior: &self.prior,
            col_sq_norms: &self.norms,
        }
    }
}

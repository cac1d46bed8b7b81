#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use tvp_sparse::dist::{inv_gamma, normal, std_normal, RngStream};
use tvp_sparse::models::{EquationSampler, ErrorVariance, SamplerSettings};
use tvp_sparse::priors::{PriorConfig, PriorState};
use tvp_sparse::state_space::StateTrajectory;
use tvp_sparse::stochvol::{sample_h_path, sample_mixture_indicators, sample_sv_params, simulate_h, SvPrior, SvState};
use tvp_sparse::stochvol::{MIX_MEAN, MIX_PROB, MIX_VAR};

/// Smoothed means and variances (`T × n`) of `β̃` for
/// `y_t = c'w_t + (√v ⊙ w_t)'β̃_t + ε_t`, `β̃_t = β̃_{t−1} + η_t`, `β̃_0 = 0`,
/// by a textbook Kalman filter and Rauch–Tung–Striebel smoother.
pub fn kalman_smoother(
    y: &[f64],
    w: &DMatrix<f64>,
    constant: &[f64],
    sqrt_v: &[f64],
    obs_var: &[f64],
) -> (DMatrix<f64>, DMatrix<f64>) {
    let (t_len, n) = w.shape();
    let eye = DMatrix::<f64>::identity(n, n);
    let mut a_pred = Vec::with_capacity(t_len);
    let mut p_pred = Vec::with_capacity(t_len);
    let mut a_filt = Vec::with_capacity(t_len);
    let mut p_filt = Vec::with_capacity(t_len);
    let mut a = DVector::<f64>::zeros(n);
    let mut p = DMatrix::<f64>::zeros(n, n);
    for t in 0..t_len {
        let ap = a.clone();
        let pp = &p + &eye;
        let z = DVector::from_fn(n, |j, _| sqrt_v[j] * w[(t, j)]);
        let c: f64 = (0..n).map(|j| constant[j] * w[(t, j)]).sum();
        let f = (z.transpose() * &pp * &z)[(0, 0)] + obs_var[t];
        let gain = &pp * &z / f;
        let innov = y[t] - c - z.dot(&ap);
        a = &ap + &gain * innov;
        p = &pp - &gain * z.transpose() * &pp;
        a_pred.push(ap);
        p_pred.push(pp);
        a_filt.push(a.clone());
        p_filt.push(p.clone());
    }
    let mut means = DMatrix::zeros(t_len, n);
    let mut vars = DMatrix::zeros(t_len, n);
    let mut a_s = a_filt[t_len - 1].clone();
    let mut p_s = p_filt[t_len - 1].clone();
    for t in (0..t_len).rev() {
        if t < t_len - 1 {
            let j = &p_filt[t] * p_pred[t + 1].clone().try_inverse().unwrap();
            a_s = &a_filt[t] + &j * (&a_s - &a_pred[t + 1]);
            p_s = &p_filt[t] + &j * (&p_s - &p_pred[t + 1]) * j.transpose();
        }
        for k in 0..n {
            means[(t, k)] = a_s[k];
            vars[(t, k)] = p_s[(k, k)];
        }
    }
    (means, vars)
}

/// Comparison of one test functional between the two simulators.
#[derive(Debug, Clone)]
pub struct GewekeStat {
    pub name: String,
    pub mean_mc: f64,
    pub mean_sc: f64,
    pub z: f64,
}

fn mean_var(x: impl Iterator<Item = f64> + Clone) -> (f64, f64, f64) {
    let n = x.clone().count() as f64;
    let m = x.clone().sum::<f64>() / n;
    let v = x.map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v, n)
}

/// z-scores of `mean(mc) − mean(sc)` where both inputs are iid units: single
/// prior draws and per-chain averages of independent short chains.
pub fn compare(names: &[String], mc: &[Vec<f64>], sc: &[Vec<f64>]) -> Vec<GewekeStat> {
    names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let (ma, va, na) = mean_var(mc.iter().map(|g| g[i]));
            let (mb, vb, nb) = mean_var(sc.iter().map(|g| g[i]));
            let se = (va / na + vb / nb).sqrt();
            GewekeStat {
                name: name.clone(),
                mean_mc: ma,
                mean_sc: mb,
                z: if se > 0.0 { (ma - mb) / se } else if ma == mb { 0.0 } else { f64::INFINITY },
            }
        })
        .collect()
}

fn chain_mean(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len() as f64;
    (0..rows[0].len()).map(|i| rows.iter().map(|r| r[i]).sum::<f64>() / n).collect()
}

fn squash(x: f64) -> f64 {
    x / (1.0 + x.abs())
}

/// Joint-distribution test of the regression sampler.
pub struct RegressionGeweke {
    pub x: DMatrix<f64>,
    pub prior: PriorConfig,
    pub settings: SamplerSettings,
}

impl RegressionGeweke {
    pub fn functional_names(&self) -> Vec<String> {
        let d = 2 * self.x.ncols();
        let mut names = Vec::new();
        names.extend((0..d).map(|j| format!("alpha{j}/(1+|alpha{j}|)")));
        names.extend((0..d).map(|j| format!("alpha{j}^2/(1+alpha{j}^2)")));
        names.extend((0..self.x.ncols()).map(|j| format!("state_T{j}^2/T squashed")));
        names.push("log sigma2".into());
        if self.prior.kind != tvp_sparse::priors::PriorKind::Flat {
            names.push("global scale (log)".into());
        }
        names
    }

    fn functionals(&self, alpha: &[f64], states: &StateTrajectory, sigma2: f64, prior: &PriorState) -> Vec<f64> {
        let t_len = states.t_len() as f64;
        let mut g: Vec<f64> = alpha.iter().map(|a| squash(*a)).collect();
        g.extend(alpha.iter().map(|a| squash(a * a)));
        g.extend(states.last().iter().map(|s| squash(s * s / t_len)));
        g.push(sigma2.ln());
        if let Some(gs) = prior.global_scale() {
            g.push(match prior {
                PriorState::Nmig(_) => gs,
                _ => gs.ln(),
            });
        }
        g
    }

    fn prior_draw(&self, rng: &mut RngStream) -> (PriorState, Vec<f64>, StateTrajectory, f64) {
        let (t_len, n) = self.x.shape();
        let prior = PriorState::sample_prior(&self.prior, 2 * n, rng).unwrap();
        let var = prior.variance();
        let alpha: Vec<f64> = var.diag.iter().map(|v| normal(0.0, v.sqrt(), rng)).collect();
        let mut s = DMatrix::zeros(t_len, n);
        for j in 0..n {
            let mut acc = 0.0;
            for t in 0..t_len {
                acc += std_normal(rng);
                s[(t, j)] = acc;
            }
        }
        let sigma2 = inv_gamma(self.settings.sigma_shape, self.settings.sigma_scale, rng).unwrap();
        (prior, alpha, StateTrajectory::from_matrix(&s), sigma2)
    }

    /// Marginal-conditional sample of the functionals.
    pub fn marginal(&self, n: usize, rng: &mut RngStream) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| {
                let (p, a, s, s2) = self.prior_draw(rng);
                self.functionals(&a, &s, s2, &p)
            })
            .collect()
    }

    /// Successive-conditional simulator: independent chains of `len`
    /// sweeps, each started from an exact joint draw so that every state is
    /// a joint draw. Returns the per-chain averages of the functionals.
    pub fn successive(&self, n_chains: usize, len: usize, rng: &mut RngStream) -> Vec<Vec<f64>> {
        let t_len = self.x.nrows();
        let mut sampler = EquationSampler::new(vec![0.0; t_len], &self.x, 0, &self.prior, &self.settings).unwrap();
        (0..n_chains)
            .map(|_| {
                let (p, a, s, s2) = self.prior_draw(rng);
                sampler.prior = p;
                sampler.set_alpha_flat(&a).unwrap();
                sampler.set_states(s).unwrap();
                sampler.set_variance(ErrorVariance::Constant(s2));
                let y = sampler.simulate_y(rng);
                sampler.set_y(y).unwrap();
                let rows: Vec<Vec<f64>> = (0..len)
                    .map(|_| {
                        sampler.sweep(rng).unwrap();
                        let y = sampler.simulate_y(rng);
                        sampler.set_y(y).unwrap();
                        let s2 = sampler.variance.sigma2().unwrap();
                        self.functionals(&sampler.alpha_flat(), &sampler.states, s2, &sampler.prior)
                    })
                    .collect();
                chain_mean(&rows)
            })
            .collect()
    }
}

/// Joint-distribution test of the stochastic volatility block on the
/// linearized model `y*_t = h_t + m_{k_t} + √v_{k_t} u_t`.
pub struct SvGeweke {
    pub t_len: usize,
    pub prior: SvPrior,
}

fn draw_component<R: Rng + ?Sized>(rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (k, p) in MIX_PROB.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    MIX_PROB.len() - 1
}

impl SvGeweke {
    pub fn functional_names(&self) -> Vec<String> {
        ["mu", "rho", "log sig_eta2", "mean h", "h_T"].map(String::from).to_vec()
    }

    fn functionals(s: &SvState) -> Vec<f64> {
        let n = s.h.len() as f64;
        vec![s.mu, s.rho, s.sig_eta2.ln(), s.h.iter().sum::<f64>() / n, *s.h.last().unwrap()]
    }

    fn prior_draw(&self, rng: &mut RngStream) -> SvState {
        let (mu, rho, s2) = self.prior.sample(rng).unwrap();
        let mut s = SvState::new(self.t_len);
        s.h = simulate_h(self.t_len, mu, rho, s2, rng);
        s.mu = mu;
        s.rho = rho;
        s.sig_eta2 = s2;
        for k in s.mix_ind.iter_mut() {
            *k = draw_component(rng) as u8;
        }
        s
    }

    fn simulate_ystar(s: &SvState, rng: &mut RngStream) -> Vec<f64> {
        s.h.iter()
            .zip(&s.mix_ind)
            .map(|(h, &k)| h + MIX_MEAN[k as usize] + MIX_VAR[k as usize].sqrt() * std_normal(rng))
            .collect()
    }

    pub fn marginal(&self, n: usize, rng: &mut RngStream) -> Vec<Vec<f64>> {
        (0..n).map(|_| Self::functionals(&self.prior_draw(rng))).collect()
    }

    pub fn successive(&self, n_chains: usize, len: usize, rng: &mut RngStream) -> Vec<Vec<f64>> {
        (0..n_chains)
            .map(|_| {
                let mut s = self.prior_draw(rng);
                let mut ystar = Self::simulate_ystar(&s, rng);
                let rows: Vec<Vec<f64>> = (0..len)
                    .map(|_| {
                        sample_mixture_indicators(&ystar, &mut s, rng);
                        sample_h_path(&ystar, &mut s, rng).unwrap();
                        sample_sv_params(&mut s, &self.prior, rng).unwrap();
                        ystar = Self::simulate_ystar(&s, rng);
                        Self::functionals(&s)
                    })
                    .collect();
                chain_mean(&rows)
            })
            .collect()
    }
}

/// Fixed standard-normal regressors.
pub fn normal_design(t_len: usize, n: usize, rng: &mut RngStream) -> DMatrix<f64> {
    DMatrix::from_fn(t_len, n, |_, _| std_normal(rng))
}


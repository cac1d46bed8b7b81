use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{normal, std_normal};
use crate::error::{Error, Result};
use crate::models::reduced_form;
use crate::state_space::{NcParamVector, StateTrajectory};
use crate::stochvol::simulate_h;

/// Named zero fractions of the simulation study.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SparsityLevel {
    Sparse,
    Moderate,
    Dense,
}

impl SparsityLevel {
    pub const ALL: [SparsityLevel; 3] = [SparsityLevel::Sparse, SparsityLevel::Moderate, SparsityLevel::Dense];

    pub fn fraction(&self) -> f64 {
        match self {
            SparsityLevel::Sparse => 0.9,
            SparsityLevel::Moderate => 0.7,
            SparsityLevel::Dense => 0.3,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SparsityLevel::Sparse => "sparse",
            SparsityLevel::Moderate => "moderate",
            SparsityLevel::Dense => "dense",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpConfig {
    pub k: usize,
    pub t_len: usize,
    /// Fraction of zeros in the `2K` vector `α`.
    pub sparsity: f64,
    pub replications: usize,
    pub seed: u64,
}

impl DgpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.sparsity) {
            return Err(Error::usage(format!("sparsity {} is not in [0, 1]", self.sparsity)));
        }
        if self.k == 0 || self.t_len == 0 {
            return Err(Error::usage("K and T must be positive"));
        }
        Ok(())
    }
}

/// Scales of the simulation design: `β₀ ~ N(0, s_β²)`, `±√v ~ N(0, s_v²)`,
/// `x ~ U(−1, 1)`, `σ_ε = s_ε`.
pub const DGP_BETA_SD: f64 = 0.1;
pub const DGP_SQRT_V_SD: f64 = 0.1;
pub const DGP_SIGMA: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct SimulatedRegression {
    pub y: Vec<f64>,
    pub x: DMatrix<f64>,
    /// True `β_t` (`T × K`).
    pub beta: DMatrix<f64>,
    pub alpha: NcParamVector,
    pub states: StateTrajectory,
}

impl SimulatedRegression {
    /// Positions of true zeros in the flat `α`.
    pub fn zero_mask(&self) -> Vec<bool> {
        self.alpha.to_flat().iter().map(|a| *a == 0.0).collect()
    }
}

/// `round(fraction · dim)`.
pub fn zero_count(fraction: f64, dim: usize) -> usize {
    (fraction * dim as f64).round() as usize
}

/// Draw `α` with exactly `zero_count(sparsity, 2K)` zeros at uniformly
/// chosen positions.
pub fn draw_sparse_alpha<R: Rng + ?Sized>(k: usize, sparsity: f64, rng: &mut R) -> NcParamVector {
    let mut beta0: Vec<f64> = (0..k).map(|_| normal(0.0, DGP_BETA_SD, rng)).collect();
    let mut sqrt_v: Vec<f64> = (0..k).map(|_| normal(0.0, DGP_SQRT_V_SD, rng)).collect();
    for pos in sample(rng, 2 * k, zero_count(sparsity, 2 * k)) {
        if pos < k {
            beta0[pos] = 0.0;
        } else {
            sqrt_v[pos - k] = 0.0;
        }
    }
    NcParamVector::new(beta0, sqrt_v, 0).expect("blocks have equal length")
}

/// Simulate a TVP regression with the given coefficients through the
/// non-centered recursion.
pub fn simulate_regression<R: Rng + ?Sized>(
    alpha: &NcParamVector,
    t_len: usize,
    sigma: f64,
    rng: &mut R,
) -> SimulatedRegression {
    let k = alpha.n();
    let x = DMatrix::from_fn(t_len, k, |_, _| rng.gen_range(-1.0..1.0));
    let mut states = StateTrajectory::zeros(t_len, k);
    let mut rows = Vec::with_capacity(t_len);
    let mut prev = vec![0.0; k];
    for _ in 0..t_len {
        for p in prev.iter_mut() {
            *p += std_normal(rng);
        }
        rows.push(prev.clone());
    }
    if t_len > 0 {
        states = StateTrajectory::from_rows(&rows).expect("rectangular rows");
    }
    let beta = crate::models::reconstruct_beta_path(&alpha.constant, &alpha.sqrt_v, &states);
    let y = (0..t_len)
        .map(|t| (0..k).map(|j| x[(t, j)] * beta[(t, j)]).sum::<f64>() + sigma * std_normal(rng))
        .collect();
    SimulatedRegression {
        y,
        x,
        beta,
        alpha: alpha.clone(),
        states,
    }
}

pub fn generate_dgp<R: Rng + ?Sized>(cfg: &DgpConfig, rng: &mut R) -> Result<SimulatedRegression> {
    cfg.validate()?;
    let alpha = draw_sparse_alpha(cfg.k, cfg.sparsity, rng);
    Ok(simulate_regression(&alpha, cfg.t_len, DGP_SIGMA, rng))
}

/// Design of the synthetic TVP-VAR-SV used for forecast checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VarDgpConfig {
    pub m: usize,
    pub t_len: usize,
    pub lags: usize,
    /// Fraction of zeros in each equation's `α`.
    pub sparsity: f64,
    /// Standard deviation of nonzero constant coefficients.
    pub beta_sd: f64,
    /// Standard deviation of nonzero `±√v`.
    pub sqrt_v_sd: f64,
    pub sv_mu: f64,
    pub sv_rho: f64,
    pub sv_sig_eta2: f64,
    /// Largest allowed companion-matrix spectral radius along the path.
    pub max_radius: f64,
}

impl Default for VarDgpConfig {
    fn default() -> Self {
        Self {
            m: 3,
            t_len: 300,
            lags: 2,
            sparsity: 0.7,
            beta_sd: 0.3,
            sqrt_v_sd: 0.01,
            sv_mu: -2.0,
            sv_rho: 0.9,
            sv_sig_eta2: 0.05,
            max_radius: 0.95,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulatedVar {
    pub y: DMatrix<f64>,
    pub names: Vec<String>,
    /// Per equation: `α` over `[lags, intercept, contemporaneous]`.
    pub alpha: Vec<NcParamVector>,
    /// Per equation: structural coefficient paths (`T × (K + i)`).
    pub coef_paths: Vec<DMatrix<f64>>,
    /// `T × M` log-volatilities.
    pub log_vol: DMatrix<f64>,
}

/// Simulate a stable TVP-VAR-SV. Coefficients are redrawn until the
/// companion matrix stays inside `max_radius` at every `t`.
pub fn generate_var_dgp<R: Rng + ?Sized>(cfg: &VarDgpConfig, rng: &mut R) -> Result<SimulatedVar> {
    if cfg.m < 2 || cfg.lags == 0 || cfg.t_len <= cfg.lags {
        return Err(Error::usage("VAR DGP needs M ≥ 2, at least one lag and T > lags"));
    }
    let (m, p) = (cfg.m, cfg.lags);
    let k = m * p + 1;
    let burn = 50;
    let total = cfg.t_len + burn;
    for _ in 0..1000 {
        let mut alpha = Vec::with_capacity(m);
        let mut paths = Vec::with_capacity(m);
        for i in 0..m {
            let n = k + i;
            let mut beta0: Vec<f64> = (0..n).map(|_| normal(0.0, cfg.beta_sd, rng)).collect();
            let mut sqrt_v: Vec<f64> = (0..n).map(|_| normal(0.0, cfg.sqrt_v_sd, rng)).collect();
            for pos in sample(rng, 2 * n, zero_count(cfg.sparsity, 2 * n)) {
                if pos < n {
                    beta0[pos] = 0.0;
                } else {
                    sqrt_v[pos - n] = 0.0;
                }
            }
            let a = NcParamVector::new(beta0, sqrt_v, i).expect("blocks have equal length");
            let mut s = vec![0.0; n];
            let path = DMatrix::from_fn(total, n, |_, _| 0.0);
            let mut path = path;
            for t in 0..total {
                for (j, sj) in s.iter_mut().enumerate() {
                    *sj += std_normal(rng);
                    path[(t, j)] = a.constant[j] + a.sqrt_v[j] * *sj;
                }
            }
            alpha.push(a);
            paths.push(path);
        }
        if !(0..total).all(|t| companion_radius(&paths, t, k, m, p) < cfg.max_radius) {
            continue;
        }
        let log_vol = DMatrix::from_fn(total, m, |_, _| 0.0);
        let mut log_vol = log_vol;
        for i in 0..m {
            let h = simulate_h(total, cfg.sv_mu, cfg.sv_rho, cfg.sv_sig_eta2, rng);
            for t in 0..total {
                log_vol[(t, i)] = h[t];
            }
        }
        let mut y = DMatrix::zeros(total, m);
        for t in 0..total {
            let mut x = Vec::with_capacity(k);
            for lag in 1..=p {
                for j in 0..m {
                    x.push(if t >= lag { y[(t - lag, j)] } else { 0.0 });
                }
            }
            x.push(1.0);
            // structural recursion: y_i = x'β_i + Σ_{j<i} u_ij y_j + e^{h/2} ε
            for i in 0..m {
                let c = paths[i].row(t);
                let mut v: f64 = (0..k).map(|j| c[j] * x[j]).sum();
                for j in 0..i {
                    v += c[k + j] * y[(t, j)];
                }
                y[(t, i)] = v + (0.5 * log_vol[(t, i)]).exp() * std_normal(rng);
            }
        }
        return Ok(SimulatedVar {
            y: y.rows(burn, cfg.t_len).into_owned(),
            names: (1..=m).map(|i| format!("y{i}")).collect(),
            alpha,
            coef_paths: paths.iter().map(|p| p.rows(burn, cfg.t_len).into_owned()).collect(),
            log_vol: log_vol.rows(burn, cfg.t_len).into_owned(),
        });
    }
    Err(Error::numerical("could not draw a stable VAR within 1000 attempts"))
}

fn companion_radius(paths: &[DMatrix<f64>], t: usize, k: usize, m: usize, p: usize) -> f64 {
    let coefs: Vec<Vec<f64>> = paths.iter().map(|c| c.row(t).iter().copied().collect()).collect();
    let (b, _) = reduced_form(&coefs, k).expect("coefficient lengths are consistent");
    let mp = m * p;
    let mut comp = DMatrix::zeros(mp, mp);
    for i in 0..m {
        for j in 0..mp {
            comp[(i, j)] = b[(i, j)];
        }
    }
    for i in m..mp {
        comp[(i, i - m)] = 1.0;
    }
    comp.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

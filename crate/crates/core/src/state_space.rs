//! Non-centered design construction and forward-filtering backward-sampling.
//!
//! In the non-centered form the coefficient path of regressor `j` is
//! `β_jt = β_j0 + √v_j · β̃_jt`, where `β̃_j` is a standard random walk
//! started exactly at zero. Conditional on the states the observation
//! equation is linear in `α = (β₀', √v')'` with covariates
//! `Z_t = [W_t', (β̃_t ⊙ W_t)']'`; conditional on `α` it is a linear Gaussian
//! state space model with loadings `√v ⊙ W_t`.
//!
//! `W_t` is the regressor row. For a plain regression it is `X_t`; for
//! equation `i` of the triangularized VAR it is `[X_t', y_{1t}, …, y_{i-1,t}]'`,
//! so covariance terms are handled as ordinary (time-varying) coefficients.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Which part of `α` a coefficient belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CoefBlock {
    Constant,
    TvLoading,
    CovConstant,
    CovLoading,
}

impl CoefBlock {
    pub fn as_str(&self) -> &'static str {
        match self {
            CoefBlock::Constant => "constant",
            CoefBlock::TvLoading => "tv-loading",
            CoefBlock::CovConstant => "cov-constant",
            CoefBlock::CovLoading => "cov-loading",
        }
    }
}

/// The constant block `α` targeted by shrinkage and sparsification.
///
/// `constant` holds `β₀` followed by the `n_cov` contemporaneous constants
/// `u_{ij,0}`; `sqrt_v` holds the matching signed state standard deviations.
/// The flat layout is `[constant, sqrt_v]`, matching the columns of
/// [`NcDesign::z`].
#[derive(Clone, Debug, PartialEq)]
pub struct NcParamVector {
    pub constant: Vec<f64>,
    pub sqrt_v: Vec<f64>,
    pub n_cov: usize,
}

impl NcParamVector {
    pub fn new(constant: Vec<f64>, sqrt_v: Vec<f64>, n_cov: usize) -> Result<Self> {
        if constant.len() != sqrt_v.len() {
            return Err(Error::shape(format!(
                "constant block has {} entries but sqrt_v has {}",
                constant.len(),
                sqrt_v.len()
            )));
        }
        if n_cov > constant.len() {
            return Err(Error::shape("more covariance terms than regressors"));
        }
        Ok(Self { constant, sqrt_v, n_cov })
    }

    /// Regression layout: `β₀` and `±√v`.
    pub fn regression(beta0: Vec<f64>, sqrt_v: Vec<f64>) -> Result<Self> {
        Self::new(beta0, sqrt_v, 0)
    }

    pub fn zeros(n: usize, n_cov: usize) -> Self {
        Self {
            constant: vec![0.0; n],
            sqrt_v: vec![0.0; n],
            n_cov,
        }
    }

    /// Number of regressors (state dimension).
    pub fn n(&self) -> usize {
        self.constant.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.n()
    }

    pub fn n_beta(&self) -> usize {
        self.n() - self.n_cov
    }

    pub fn beta0(&self) -> &[f64] {
        &self.constant[..self.n_beta()]
    }

    pub fn cov0(&self) -> &[f64] {
        &self.constant[self.n_beta()..]
    }

    pub fn sqrt_v_beta(&self) -> &[f64] {
        &self.sqrt_v[..self.n_beta()]
    }

    pub fn sqrt_v_cov(&self) -> &[f64] {
        &self.sqrt_v[self.n_beta()..]
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = self.constant.clone();
        out.extend_from_slice(&self.sqrt_v);
        out
    }

    pub fn from_flat(flat: &[f64], n_cov: usize) -> Result<Self> {
        if flat.len() % 2 != 0 {
            return Err(Error::shape(format!("flat alpha has odd length {}", flat.len())));
        }
        let n = flat.len() / 2;
        Self::new(flat[..n].to_vec(), flat[n..].to_vec(), n_cov)
    }

    pub fn block(&self, j: usize) -> CoefBlock {
        let n = self.n();
        let nb = self.n_beta();
        match (j < n, j % n < nb) {
            (true, true) => CoefBlock::Constant,
            (true, false) => CoefBlock::CovConstant,
            (false, true) => CoefBlock::TvLoading,
            (false, false) => CoefBlock::CovLoading,
        }
    }
}

/// Standardized state history `β̃_{1:T}` stored row-major (`T × n`).
/// The initial state `β̃₀` is exactly zero and not stored.
#[derive(Clone, Debug, PartialEq)]
pub struct StateTrajectory {
    values: Vec<f64>,
    t_len: usize,
    n: usize,
}

impl StateTrajectory {
    pub fn zeros(t_len: usize, n: usize) -> Self {
        Self {
            values: vec![0.0; t_len * n],
            t_len,
            n,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let t_len = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(t_len * n);
        for (t, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::shape(format!("state row {t} has {} entries, expected {n}", r.len())));
            }
            values.extend_from_slice(r);
        }
        Ok(Self { values, t_len, n })
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let (t_len, n) = m.shape();
        let mut values = Vec::with_capacity(t_len * n);
        for t in 0..t_len {
            values.extend(m.row(t).iter());
        }
        Self { values, t_len, n }
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.n..(t + 1) * self.n]
    }

    pub fn get(&self, t: usize, j: usize) -> f64 {
        self.values[t * self.n + j]
    }

    pub fn initial(&self) -> Vec<f64> {
        vec![0.0; self.n]
    }

    pub fn last(&self) -> &[f64] {
        self.row(self.t_len - 1)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.t_len, self.n, &self.values)
    }

    /// Flip the sign of state `j` over the whole history.
    pub fn negate(&mut self, j: usize) {
        for t in 0..self.t_len {
            self.values[t * self.n + j] = -self.values[t * self.n + j];
        }
    }
}

#[derive(Clone, Debug)]
pub struct NcDesign {
    /// `T × 2n`; row `t` is `[W_t', (β̃_t ⊙ W_t)']`.
    pub z: DMatrix<f64>,
    pub col_sq_norms: Vec<f64>,
}

impl NcDesign {
    pub fn fitted(&self, alpha: &NcParamVector) -> Vec<f64> {
        let a = alpha.to_flat();
        (0..self.z.nrows())
            .map(|t| self.z.row(t).iter().zip(&a).map(|(z, a)| z * a).sum())
            .collect()
    }
}

/// Stack `X` and the contemporaneous regressors into `W = [X, contemp]`.
pub fn regressors(x: &DMatrix<f64>, contemp: Option<&DMatrix<f64>>) -> Result<DMatrix<f64>> {
    match contemp {
        None => Ok(x.clone()),
        Some(c) => {
            if c.nrows() != x.nrows() {
                return Err(Error::shape(format!(
                    "contemporaneous block has {} rows, X has {}",
                    c.nrows(),
                    x.nrows()
                )));
            }
            let mut w = DMatrix::zeros(x.nrows(), x.ncols() + c.ncols());
            w.columns_mut(0, x.ncols()).copy_from(x);
            w.columns_mut(x.ncols(), c.ncols()).copy_from(c);
            Ok(w)
        }
    }
}

pub fn build_design(
    x: &DMatrix<f64>,
    states: &StateTrajectory,
    alpha: &NcParamVector,
    contemp: Option<&DMatrix<f64>>,
) -> Result<NcDesign> {
    let w = regressors(x, contemp)?;
    let n_cov = contemp.map_or(0, |c| c.ncols());
    if alpha.n() != w.ncols() || alpha.n_cov != n_cov {
        return Err(Error::shape(format!(
            "alpha covers {} regressors ({} covariance), design has {} ({})",
            alpha.n(),
            alpha.n_cov,
            w.ncols(),
            n_cov
        )));
    }
    design_from_regressors(&w, states)
}

pub fn design_from_regressors(w: &DMatrix<f64>, states: &StateTrajectory) -> Result<NcDesign> {
    let (t_len, n) = w.shape();
    if states.t_len() != t_len || states.n() != n {
        return Err(Error::shape(format!(
            "states are {}x{}, regressors are {}x{}",
            states.t_len(),
            states.n(),
            t_len,
            n
        )));
    }
    let mut z = DMatrix::zeros(t_len, 2 * n);
    let mut norms = vec![0.0; 2 * n];
    for t in 0..t_len {
        let s = states.row(t);
        for j in 0..n {
            let wt = w[(t, j)];
            let zt = s[j] * wt;
            z[(t, j)] = wt;
            z[(t, n + j)] = zt;
            norms[j] += wt * wt;
            norms[n + j] += zt * zt;
        }
    }
    Ok(NcDesign { z, col_sq_norms: norms })
}

/// Reusable buffers for [`ffbs_into`].
#[derive(Clone, Debug, Default)]
pub struct FfbsWorkspace {
    w_rows: Vec<f64>,
    means: Vec<f64>,
    covs: Vec<f64>,
    pred: Vec<f64>,
    factor: Vec<f64>,
    inv: Vec<f64>,
    work: Vec<f64>,
    vec_a: Vec<f64>,
    vec_b: Vec<f64>,
    vec_c: Vec<f64>,
    dk_gain: Vec<f64>,
    dk_r: Vec<f64>,
    dk_e: Vec<f64>,
    dk_v: Vec<f64>,
    dk_f: Vec<f64>,
}

impl FfbsWorkspace {
    fn prepare(&mut self, t_len: usize, n: usize) {
        let nn = n * n;
        self.means.resize(t_len * n, 0.0);
        self.covs.resize(t_len * nn, 0.0);
        self.pred.resize(nn, 0.0);
        self.factor.resize(nn, 0.0);
        self.inv.resize(nn, 0.0);
        self.work.resize(nn, 0.0);
        self.vec_a.resize(n, 0.0);
        self.vec_b.resize(n, 0.0);
        self.vec_c.resize(n, 0.0);
    }

    fn prepare_dk(&mut self, t_len: usize, n: usize) {
        self.pred.resize(n * n, 0.0);
        self.vec_a.resize(n, 0.0);
        self.vec_b.resize(n, 0.0);
        self.vec_c.resize(n, 0.0);
        self.dk_gain.resize(t_len * n, 0.0);
        self.dk_r.resize(t_len * n, 0.0);
        self.dk_e.resize(t_len, 0.0);
        self.dk_v.resize(t_len, 0.0);
        self.dk_f.resize(t_len, 0.0);
    }

    /// Cached regressors, row-major `T × n`.
    pub fn w_rows(&self) -> &[f64] {
        &self.w_rows
    }

    /// Cache `W` row-major; call again whenever the regressors change.
    pub fn set_regressors(&mut self, w: &DMatrix<f64>) {
        let (t_len, n) = w.shape();
        self.w_rows.clear();
        self.w_rows.reserve(t_len * n);
        for t in 0..t_len {
            self.w_rows.extend(w.row(t).iter());
        }
    }
}

/// Joint draw of `β̃_{1:T}` given `α` and the observation variances.
pub fn ffbs<R: Rng + ?Sized>(
    y: &[f64],
    w: &DMatrix<f64>,
    alpha: &NcParamVector,
    obs_var: &[f64],
    rng: &mut R,
) -> Result<StateTrajectory> {
    let mut ws = FfbsWorkspace::default();
    ws.set_regressors(w);
    let mut out = StateTrajectory::zeros(w.nrows(), w.ncols());
    ffbs_into(y, alpha, obs_var, &mut ws, &mut out, rng)?;
    Ok(out)
}

/// Algorithm used for the joint state draw.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateSampler {
    /// Covariance-form filter with Carter–Kohn backward sampling, `O(T n³)`.
    CarterKohn,
    /// Durbin–Koopman mean-correction simulation smoother, `O(T n²)`.
    #[default]
    DurbinKoopman,
}

/// Draw `β̃_{1:T}` with the chosen algorithm; both target the same conditional.
pub fn draw_states_into<R: Rng + ?Sized>(
    method: StateSampler,
    y: &[f64],
    alpha: &NcParamVector,
    obs_var: &[f64],
    ws: &mut FfbsWorkspace,
    out: &mut StateTrajectory,
    rng: &mut R,
) -> Result<()> {
    match method {
        StateSampler::CarterKohn => ffbs_into(y, alpha, obs_var, ws, out, rng),
        StateSampler::DurbinKoopman => simulation_smoother_into(y, alpha, obs_var, ws, out, rng),
    }
}

fn check_inputs(
    y: &[f64],
    alpha: &NcParamVector,
    obs_var: &[f64],
    ws: &FfbsWorkspace,
    out: &mut StateTrajectory,
) -> Result<()> {
    let n = alpha.n();
    let t_len = y.len();
    if ws.w_rows.len() != t_len * n || obs_var.len() != t_len {
        return Err(Error::shape(format!(
            "state draw: y has {t_len} rows, regressors cache {} values for n={n}, obs_var has {}",
            ws.w_rows.len(),
            obs_var.len()
        )));
    }
    if out.t_len != t_len || out.n != n {
        *out = StateTrajectory::zeros(t_len, n);
    }
    if let Some((t, v)) = obs_var.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::domain(format!("observation variance {v} at t={t} must be positive")));
    }
    Ok(())
}

/// Joint state draw by simulating from the prior and adding the smoothed
/// mean of the residual data (Durbin & Koopman, 2002).
///
/// With scalar observations, identity transitions and unit innovations the
/// filter needs only rank-one updates and the smoother only vector
/// recursions: `r_{t-1} = f_t (v_t/F_t − K_t'r_t) + r_t`, `x̂_1 = r_0`,
/// `x̂_{t+1} = x̂_t + r_t`.
pub fn simulation_smoother_into<R: Rng + ?Sized>(
    y: &[f64],
    alpha: &NcParamVector,
    obs_var: &[f64],
    ws: &mut FfbsWorkspace,
    out: &mut StateTrajectory,
    rng: &mut R,
) -> Result<()> {
    check_inputs(y, alpha, obs_var, ws, out)?;
    let n = alpha.n();
    let t_len = y.len();
    if t_len == 0 {
        return Ok(());
    }
    ws.prepare_dk(t_len, n);

    // unconditional draw x⁺ into `out`, residual data e = y − c'w − y⁺
    let x = &mut ws.vec_a;
    x.fill(0.0);
    for t in 0..t_len {
        let wt = &ws.w_rows[t * n..(t + 1) * n];
        let mut e = y[t] - obs_var[t].sqrt() * crate::dist::std_normal(rng);
        for j in 0..n {
            x[j] += crate::dist::std_normal(rng);
            e -= alpha.constant[j] * wt[j] + alpha.sqrt_v[j] * wt[j] * x[j];
        }
        out.values[t * n..(t + 1) * n].copy_from_slice(x);
        ws.dk_e[t] = e;
    }

    // filter
    let a = &mut ws.vec_b;
    a.fill(0.0);
    let p = &mut ws.pred;
    p.fill(0.0);
    for i in 0..n {
        p[i * n + i] = 1.0;
    }
    let f = &mut ws.vec_a;
    let g = &mut ws.vec_c;
    for t in 0..t_len {
        let wt = &ws.w_rows[t * n..(t + 1) * n];
        for j in 0..n {
            f[j] = alpha.sqrt_v[j] * wt[j];
        }
        for i in 0..n {
            let row = &p[i * n..(i + 1) * n];
            g[i] = row.iter().zip(f.iter()).map(|(a, b)| a * b).sum();
        }
        let ff = f.iter().zip(g.iter()).map(|(a, b)| a * b).sum::<f64>() + obs_var[t];
        if !(ff > 0.0) || !ff.is_finite() {
            return Err(Error::numerical(format!("innovation variance {ff} at t={t}")));
        }
        let v = ws.dk_e[t] - f.iter().zip(a.iter()).map(|(x, y)| x * y).sum::<f64>();
        let k = &mut ws.dk_gain[t * n..(t + 1) * n];
        for i in 0..n {
            k[i] = g[i] / ff;
            a[i] += k[i] * v;
        }
        for i in 0..n {
            for j in 0..=i {
                let val = p[i * n + j] - g[i] * g[j] / ff;
                p[i * n + j] = val;
                p[j * n + i] = val;
            }
            p[i * n + i] += 1.0;
            if !(p[i * n + i] > 0.0) || !p[i * n + i].is_finite() {
                return Err(Error::numerical(format!(
                    "filter covariance lost positive definiteness at t={t}"
                )));
            }
        }
        ws.dk_v[t] = v;
        ws.dk_f[t] = ff;
    }

    // backward: dk_r row t holds r_{t-1}
    let r = &mut ws.vec_b;
    r.fill(0.0);
    for t in (0..t_len).rev() {
        let wt = &ws.w_rows[t * n..(t + 1) * n];
        let k = &ws.dk_gain[t * n..(t + 1) * n];
        let kr: f64 = k.iter().zip(r.iter()).map(|(a, b)| a * b).sum();
        let c = ws.dk_v[t] / ws.dk_f[t] - kr;
        for j in 0..n {
            r[j] += alpha.sqrt_v[j] * wt[j] * c;
        }
        ws.dk_r[t * n..(t + 1) * n].copy_from_slice(r);
    }

    // forward: smoothed mean of the residual data added to x⁺
    let xhat = &mut ws.vec_c;
    xhat.copy_from_slice(&ws.dk_r[..n]);
    for t in 0..t_len {
        if t > 0 {
            let rt = &ws.dk_r[t * n..(t + 1) * n];
            for j in 0..n {
                xhat[j] += rt[j];
            }
        }
        for j in 0..n {
            out.values[t * n + j] += xhat[j];
        }
    }
    Ok(())
}

/// [`ffbs`] against regressors cached in `ws`, writing into `out`.
pub fn ffbs_into<R: Rng + ?Sized>(
    y: &[f64],
    alpha: &NcParamVector,
    obs_var: &[f64],
    ws: &mut FfbsWorkspace,
    out: &mut StateTrajectory,
    rng: &mut R,
) -> Result<()> {
    check_inputs(y, alpha, obs_var, ws, out)?;
    let n = alpha.n();
    let t_len = y.len();
    if t_len == 0 {
        return Ok(());
    }
    ws.prepare(t_len, n);
    let nn = n * n;

    // forward filter; state starts at zero with zero covariance
    let mut m_prev = vec![0.0; n];
    let mut c_prev = vec![0.0; nn];
    for t in 0..t_len {
        let wt = &ws.w_rows[t * n..(t + 1) * n];
        let r = &mut ws.pred;
        r.copy_from_slice(&c_prev);
        for i in 0..n {
            r[i * n + i] += 1.0;
        }
        let f = &mut ws.vec_a;
        let mut any_loading = false;
        let mut obs = y[t];
        for j in 0..n {
            f[j] = alpha.sqrt_v[j] * wt[j];
            any_loading |= f[j] != 0.0;
            obs -= alpha.constant[j] * wt[j];
        }
        let m_t = &mut ws.means[t * n..(t + 1) * n];
        let c_t = &mut ws.covs[t * nn..(t + 1) * nn];
        m_t.copy_from_slice(&m_prev);
        if !any_loading {
            c_t.copy_from_slice(r);
        } else {
            let g = &mut ws.vec_b;
            for i in 0..n {
                let row = &r[i * n..(i + 1) * n];
                g[i] = row.iter().zip(f.iter()).map(|(a, b)| a * b).sum();
            }
            let s: f64 = f.iter().zip(g.iter()).map(|(a, b)| a * b).sum();
            let q = s + obs_var[t];
            if !(q > 0.0) || !q.is_finite() {
                return Err(Error::numerical(format!("innovation variance {q} at t={t}")));
            }
            let e = obs - f.iter().zip(m_prev.iter()).map(|(a, b)| a * b).sum::<f64>();
            let k = &mut ws.vec_c;
            for i in 0..n {
                k[i] = g[i] / q;
                m_t[i] += k[i] * e;
            }
            // Joseph form (I - k f')R(I - k f')' + k k' σ², expanded for a rank-one update
            let kk = s + obs_var[t];
            for i in 0..n {
                for j in 0..=i {
                    let v = r[i * n + j] - k[i] * g[j] - g[i] * k[j] + k[i] * k[j] * kk;
                    c_t[i * n + j] = v;
                    c_t[j * n + i] = v;
                }
            }
        }
        for i in 0..n {
            if !(c_t[i * n + i] >= 0.0) || !c_t[i * n + i].is_finite() {
                return Err(Error::numerical(format!(
                    "filter covariance lost positive definiteness at t={t}"
                )));
            }
        }
        m_prev.copy_from_slice(m_t);
        c_prev.copy_from_slice(c_t);
    }

    // backward sampling
    let z = &mut ws.vec_a;
    let draw = &mut ws.vec_b;
    {
        let t = t_len - 1;
        linalg::psd_factor(&ws.covs[t * nn..(t + 1) * nn], n, &mut ws.factor)
            .map_err(|e| Error::numerical(format!("{e} (t={t})")))?;
        linalg::draw_with_factor(&ws.means[t * n..(t + 1) * n], &ws.factor, n, z, draw, rng);
        out.values[t * n..(t + 1) * n].copy_from_slice(draw);
    }
    for t in (0..t_len - 1).rev() {
        // R = C_t + I; mean = b - R⁻¹(b - m_t); cov = I - R⁻¹
        let r = &mut ws.pred;
        r.copy_from_slice(&ws.covs[t * nn..(t + 1) * nn]);
        for i in 0..n {
            r[i * n + i] += 1.0;
        }
        if !linalg::cholesky_in_place(r, n) {
            return Err(Error::numerical(format!("smoothing gain singular at t={t}")));
        }
        linalg::chol_inverse(r, n, &mut ws.inv, &mut ws.work);
        let (head, tail) = out.values.split_at_mut((t + 1) * n);
        let next = &tail[..n];
        let m_t = &ws.means[t * n..(t + 1) * n];
        let mean = &mut ws.vec_c;
        for i in 0..n {
            let row = &ws.inv[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for j in 0..n {
                acc += row[j] * (next[j] - m_t[j]);
            }
            mean[i] = next[i] - acc;
        }
        let cov = &mut ws.work;
        for i in 0..nn {
            cov[i] = -ws.inv[i];
        }
        for i in 0..n {
            cov[i * n + i] += 1.0;
        }
        linalg::symmetrize(cov, n);
        linalg::psd_factor(cov, n, &mut ws.factor)
            .map_err(|e| Error::numerical(format!("{e} (t={t})")))?;
        linalg::draw_with_factor(mean, &ws.factor, n, z, draw, rng);
        head[t * n..(t + 1) * n].copy_from_slice(draw);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::RngStream;

    #[test]
    fn design_with_zero_states() {
        let x = DMatrix::from_element(5, 1, 1.0);
        let states = StateTrajectory::zeros(5, 1);
        let alpha = NcParamVector::zeros(1, 0);
        let d = build_design(&x, &states, &alpha, None).unwrap();
        for t in 0..5 {
            assert_eq!(d.z[(t, 0)], 1.0);
            assert_eq!(d.z[(t, 1)], 0.0);
        }
        assert_eq!(d.col_sq_norms, vec![5.0, 0.0]);
    }

    #[test]
    fn design_hand_example() {
        let x = DMatrix::from_column_slice(2, 1, &[2.0, 3.0]);
        let states = StateTrajectory::from_rows(&[vec![1.0], vec![-1.0]]).unwrap();
        let alpha = NcParamVector::zeros(1, 0);
        let d = build_design(&x, &states, &alpha, None).unwrap();
        assert_eq!((d.z[(0, 0)], d.z[(0, 1)]), (2.0, 2.0));
        assert_eq!((d.z[(1, 0)], d.z[(1, 1)]), (3.0, -3.0));
        assert_eq!(d.col_sq_norms, vec![13.0, 13.0]);
    }

    #[test]
    fn design_with_contemporaneous_regressor() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, 1.0, -0.5, 1.0, 2.0]);
        let contemp = DMatrix::from_column_slice(3, 1, &[0.3, -0.2, 0.1]);
        let states = StateTrajectory::from_rows(&[
            vec![0.1, 0.2, 1.0],
            vec![0.1, 0.2, 2.0],
            vec![0.1, 0.2, 3.0],
        ])
        .unwrap();
        let alpha = NcParamVector::zeros(3, 1);
        let d = build_design(&x, &states, &alpha, Some(&contemp)).unwrap();
        assert_eq!(d.z.ncols(), 6);
        assert_eq!(d.z[(1, 2)], -0.2);
        assert!((d.z[(1, 5)] - (-0.4)).abs() < 1e-15);
        assert_eq!(alpha.block(2), CoefBlock::CovConstant);
        assert_eq!(alpha.block(5), CoefBlock::CovLoading);
        assert_eq!(alpha.block(4), CoefBlock::TvLoading);
    }

    #[test]
    fn design_shape_errors() {
        let x = DMatrix::from_element(4, 2, 1.0);
        let states = StateTrajectory::zeros(3, 2);
        let alpha = NcParamVector::zeros(2, 0);
        assert!(matches!(build_design(&x, &states, &alpha, None), Err(Error::Shape(_))));
        let states = StateTrajectory::zeros(4, 2);
        let alpha = NcParamVector::zeros(3, 0);
        assert!(matches!(build_design(&x, &states, &alpha, None), Err(Error::Shape(_))));
    }

    #[test]
    fn sign_flip_leaves_fit_unchanged() {
        let mut rng = RngStream::new(3, 0);
        let x = DMatrix::from_fn(10, 2, |_, _| rng.gen::<f64>() - 0.5);
        let rows: Vec<Vec<f64>> = (0..10).map(|t| vec![t as f64 * 0.1, -(t as f64) * 0.3]).collect();
        let mut states = StateTrajectory::from_rows(&rows).unwrap();
        let mut alpha = NcParamVector::regression(vec![0.5, -0.2], vec![0.3, 0.7]).unwrap();
        let before = build_design(&x, &states, &alpha, None).unwrap().fitted(&alpha);
        alpha.sqrt_v[1] = -alpha.sqrt_v[1];
        states.negate(1);
        let after = build_design(&x, &states, &alpha, None).unwrap().fitted(&alpha);
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn single_step_conjugate_update() {
        // y = β̃₁ + ε, β̃₁ ~ N(0,1), ε ~ N(0,1), y=2 → N(1, 1/2)
        let w = DMatrix::from_element(1, 1, 1.0);
        let alpha = NcParamVector::regression(vec![0.0], vec![1.0]).unwrap();
        let mut rng = RngStream::new(17, 0);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| ffbs(&[2.0], &w, &alpha, &[1.0], &mut rng).unwrap().get(0, 0))
            .collect();
        let m = draws.iter().sum::<f64>() / n as f64;
        let v = draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!((m - 1.0).abs() < 3.0 * (0.5 / n as f64).sqrt(), "mean {m}");
        assert!((v - 0.5).abs() < 0.01, "var {v}");
    }

    #[test]
    fn zero_loadings_follow_prior_walk() {
        let t_len = 6;
        let w = DMatrix::from_element(t_len, 2, 1.0);
        let alpha = NcParamVector::regression(vec![0.3, 0.1], vec![0.0, 0.0]).unwrap();
        let y = vec![5.0; t_len];
        let obs = vec![1.0; t_len];
        let mut rng = RngStream::new(5, 0);
        let n = 20_000;
        let mut sq = vec![0.0; t_len];
        for _ in 0..n {
            let s = ffbs(&y, &w, &alpha, &obs, &mut rng).unwrap();
            for t in 0..t_len {
                sq[t] += s.get(t, 0).powi(2);
            }
        }
        for (t, s) in sq.iter().enumerate() {
            let var = s / n as f64;
            let expected = (t + 1) as f64;
            assert!((var - expected).abs() / expected < 0.05, "t={t} var={var}");
        }
    }

    fn state_moments(method: StateSampler, reps: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let t_len = 8;
        let w = DMatrix::from_fn(t_len, 2, |t, j| if j == 0 { 1.0 } else { (t as f64 * 0.7).cos() });
        let alpha = NcParamVector::regression(vec![0.2, -0.4], vec![0.8, -0.5]).unwrap();
        let y: Vec<f64> = (0..t_len).map(|t| (t as f64 * 0.9).sin()).collect();
        let obs: Vec<f64> = (0..t_len).map(|t| 0.3 + 0.1 * t as f64).collect();
        let mut ws = FfbsWorkspace::default();
        ws.set_regressors(&w);
        let mut out = StateTrajectory::zeros(t_len, 2);
        let mut rng = RngStream::new(seed, 0);
        let (mut m, mut q) = (vec![0.0; t_len * 2], vec![0.0; t_len * 2]);
        for _ in 0..reps {
            draw_states_into(method, &y, &alpha, &obs, &mut ws, &mut out, &mut rng).unwrap();
            for (i, v) in out.as_slice().iter().enumerate() {
                m[i] += v;
                q[i] += v * v;
            }
        }
        let r = reps as f64;
        let mean: Vec<f64> = m.iter().map(|x| x / r).collect();
        let var = q.iter().zip(&mean).map(|(x, mu)| x / r - mu * mu).collect();
        (mean, var)
    }

    #[test]
    fn simulation_smoother_agrees_with_carter_kohn() {
        let reps = 40_000;
        let (m1, v1) = state_moments(StateSampler::CarterKohn, reps, 31);
        let (m2, v2) = state_moments(StateSampler::DurbinKoopman, reps, 32);
        for i in 0..m1.len() {
            let se = ((v1[i] + v2[i]) / reps as f64).sqrt();
            assert!((m1[i] - m2[i]).abs() < 4.0 * se, "mean {i}: {} vs {}", m1[i], m2[i]);
            assert!((v1[i] / v2[i] - 1.0).abs() < 0.05, "var {i}: {} vs {}", v1[i], v2[i]);
        }
    }

    #[test]
    fn simulation_smoother_single_step() {
        let w = DMatrix::from_element(1, 1, 1.0);
        let alpha = NcParamVector::regression(vec![0.0], vec![1.0]).unwrap();
        let mut ws = FfbsWorkspace::default();
        ws.set_regressors(&w);
        let mut out = StateTrajectory::zeros(1, 1);
        let mut rng = RngStream::new(18, 0);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| {
                simulation_smoother_into(&[2.0], &alpha, &[1.0], &mut ws, &mut out, &mut rng).unwrap();
                out.get(0, 0)
            })
            .collect();
        let m = draws.iter().sum::<f64>() / n as f64;
        let v = draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!((m - 1.0).abs() < 3.0 * (0.5 / n as f64).sqrt(), "mean {m}");
        assert!((v - 0.5).abs() < 0.01, "var {v}");
    }

    #[test]
    fn rejects_nonpositive_variance() {
        let w = DMatrix::from_element(2, 1, 1.0);
        let alpha = NcParamVector::regression(vec![0.0], vec![1.0]).unwrap();
        let err = ffbs(&[1.0, 1.0], &w, &alpha, &[1.0, 0.0], &mut RngStream::new(0, 0));
        assert!(matches!(err, Err(Error::Domain(_))));
    }
}

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{run_sampler, DrawSink, EquationSampler, FitSummary, SamplerSettings};
use crate::dist::RngStream;
use crate::error::{Error, Result};
use crate::priors::PriorConfig;

#[derive(Clone, Debug)]
pub struct VarSpec {
    /// `T × M` panel, one column per variable.
    pub y: DMatrix<f64>,
    pub names: Vec<String>,
    pub lags: usize,
    pub intercept: bool,
    pub prior: PriorConfig,
    pub settings: SamplerSettings,
}

impl VarSpec {
    pub fn new(y: DMatrix<f64>, names: Vec<String>, lags: usize, prior: PriorConfig, settings: SamplerSettings) -> Self {
        Self {
            y,
            names,
            lags,
            intercept: true,
            prior,
            settings,
        }
    }
}

/// Lagged design of a VAR on the effective sample `t = P+1, …, T`.
#[derive(Clone, Debug, PartialEq)]
pub struct VarData {
    /// `(T − P) × K` with rows `(y'_{t−1}, …, y'_{t−P}, 1)`.
    pub x: DMatrix<f64>,
    /// `(T − P) × M`.
    pub y: DMatrix<f64>,
    pub x_names: Vec<String>,
    pub y_names: Vec<String>,
    pub lags: usize,
    pub intercept: bool,
}

impl VarData {
    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    pub fn m(&self) -> usize {
        self.y.ncols()
    }
}

pub fn build_var_data(y: &DMatrix<f64>, names: &[String], lags: usize, intercept: bool) -> Result<VarData> {
    let (t_len, m) = y.shape();
    if names.len() != m {
        return Err(Error::shape(format!("{} names for {m} series", names.len())));
    }
    if lags == 0 {
        return Err(Error::usage("the VAR needs at least one lag"));
    }
    if t_len <= lags + 1 {
        return Err(Error::usage(format!("{t_len} observations are too few for {lags} lags")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::data("non-finite value in the VAR panel"));
    }
    let k = m * lags + usize::from(intercept);
    let n_eff = t_len - lags;
    let x = DMatrix::from_fn(n_eff, k, |r, c| {
        if c < m * lags {
            let (p, j) = (c / m + 1, c % m);
            y[(r + lags - p, j)]
        } else {
            1.0
        }
    });
    let mut x_names: Vec<String> = (1..=lags)
        .flat_map(|p| names.iter().map(move |n| format!("{n}.l{p}")))
        .collect();
    if intercept {
        x_names.push("const".into());
    }
    Ok(VarData {
        x,
        y: y.rows(lags, n_eff).into_owned(),
        x_names,
        y_names: names.to_vec(),
        lags,
        intercept,
    })
}

/// `W` for equation `i`: the lagged design followed by `y_{1t}, …, y_{i−1,t}`,
/// with regressor names.
pub fn equation_regressors(data: &VarData, i: usize) -> (DMatrix<f64>, Vec<String>) {
    let k = data.k();
    let w = DMatrix::from_fn(data.x.nrows(), k + i, |r, c| {
        if c < k {
            data.x[(r, c)]
        } else {
            data.y[(r, c - k)]
        }
    });
    let mut names = data.x_names.clone();
    names.extend(data.y_names[..i].iter().cloned());
    (w, names)
}

/// Fit every equation on its own derived stream, in parallel on the
/// current rayon pool. `make_sink(i, regressor_names)` builds the sink for
/// equation `i`; results come back in equation order.
pub fn fit_tvp_var<S, F>(spec: &VarSpec, rng: &RngStream, make_sink: F) -> Result<(VarData, Vec<(S, FitSummary)>)>
where
    S: DrawSink + Send,
    F: Fn(usize, &[String]) -> S + Sync,
{
    spec.settings.validate()?;
    if spec.y.ncols() < 2 {
        return Err(Error::usage("a VAR needs at least two variables"));
    }
    let data = build_var_data(&spec.y, &spec.names, spec.lags, spec.intercept)?;
    let out = (0..data.m())
        .into_par_iter()
        .map(|i| {
            let (w, names) = equation_regressors(&data, i);
            let y_i: Vec<f64> = data.y.column(i).iter().copied().collect();
            let mut sampler = EquationSampler::new(y_i, &w, i, &spec.prior, &spec.settings)?;
            let mut sink = make_sink(i, &names);
            let mut eq_rng = rng.derive(i as u64);
            let mut summary = run_sampler(&mut sampler, &spec.settings, &mut eq_rng, &mut sink)?;
            if w.nrows() <= w.ncols() {
                summary
                    .warnings
                    .push(format!("equation {i}: T = {} does not exceed K = {}", w.nrows(), w.ncols()));
            }
            Ok((sink, summary))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((data, out))
}

/// Reduced form at one time point from structural coefficients.
///
/// `coefs[i]` holds equation `i`'s `K` lag coefficients followed by its `i`
/// contemporaneous coefficients `u_{i1}, …, u_{i,i−1}`. Returns
/// `(A⁻¹B, A⁻¹)` with `A = I − U`, so the conditional mean is `A⁻¹B x`.
pub fn reduced_form(coefs: &[Vec<f64>], k: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let m = coefs.len();
    for (i, c) in coefs.iter().enumerate() {
        if c.len() != k + i {
            return Err(Error::shape(format!("equation {i} has {} coefficients, expected {}", c.len(), k + i)));
        }
    }
    let b = DMatrix::from_fn(m, k, |i, j| coefs[i][j]);
    // A⁻¹ by forward substitution on the unit lower-triangular A
    let mut a_inv = DMatrix::<f64>::identity(m, m);
    for i in 1..m {
        for c in 0..i {
            let mut s = 0.0;
            for j in c..i {
                s += coefs[i][k + j] * a_inv[(j, c)];
            }
            a_inv[(i, c)] = s;
        }
    }
    Ok((&a_inv * b, a_inv))
}

/// `Σ_t = A⁻¹ H_t A⁻ᵀ` from the structural coefficients and the
/// per-equation error variances at `t`.
pub fn reconstruct_sigma(coefs: &[Vec<f64>], variances: &[f64], k: usize) -> Result<DMatrix<f64>> {
    if variances.len() != coefs.len() || variances.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::domain("need one positive variance per equation"));
    }
    let (_, a_inv) = reduced_form(coefs, k)?;
    let h = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(variances));
    let s = &a_inv * h * a_inv.transpose();
    Ok((&s + s.transpose()) * 0.5)
}

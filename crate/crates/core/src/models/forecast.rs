//! Predictive simulation from stored VAR posterior draws.
//!
//! For every retained draw the coefficient states take random-walk steps and
//! the log-volatilities AR(1) steps beyond the sample; the final-horizon
//! predictive given the simulated path is Gaussian with mean `A⁻¹B x` and
//! covariance `A⁻¹HA⁻ᵀ`. Raw and sparsified coefficients share the same
//! innovations, so their scores differ only through sparsification.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{reduced_form, DrawRecord, DrawSink, ErrorVariance};
use crate::dist::std_normal;
use crate::error::{Error, Result};
use crate::stochvol::VolForecast;

#[derive(Clone, Debug, PartialEq)]
pub enum VolDraw {
    Constant(f64),
    Sv { mu: f64, rho: f64, sig_eta2: f64, h_last: f64 },
}

/// What the forecaster needs from one draw of one equation.
#[derive(Clone, Debug, PartialEq)]
pub struct EquationDraw {
    pub beta0: Vec<f64>,
    pub sqrt_v: Vec<f64>,
    pub sparse: Option<(Vec<f64>, Vec<f64>)>,
    pub state_last: Vec<f64>,
    pub vol: VolDraw,
}

#[derive(Clone, Debug, Default)]
pub struct ForecastSink {
    pub draws: Vec<EquationDraw>,
}

impl DrawSink for ForecastSink {
    fn accept(&mut self, r: &DrawRecord<'_>) -> Result<()> {
        let (beta0, sqrt_v) = r.coefficients(false).expect("raw coefficients always exist");
        let vol = match r.variance {
            ErrorVariance::Constant(s2) => VolDraw::Constant(*s2),
            ErrorVariance::Sv(sv) => VolDraw::Sv {
                mu: sv.mu,
                rho: sv.rho,
                sig_eta2: sv.sig_eta2,
                h_last: *sv.h.last().ok_or_else(|| Error::shape("empty volatility path"))?,
            },
        };
        self.draws.push(EquationDraw {
            beta0,
            sqrt_v,
            sparse: r.coefficients(true).filter(|_| r.sparsified.is_some()),
            state_last: r.states.last().to_vec(),
            vol,
        });
        Ok(())
    }
}

/// Posterior draws of all equations, paired by draw index.
#[derive(Clone, Debug)]
pub struct VarPosterior {
    pub equations: Vec<Vec<EquationDraw>>,
    pub k: usize,
    pub lags: usize,
    pub intercept: bool,
}

/// Gaussian predictive of one draw at the final horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictiveDraw {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl VarPosterior {
    pub fn new(equations: Vec<Vec<EquationDraw>>, k: usize, lags: usize, intercept: bool) -> Result<Self> {
        let n = equations.first().map_or(0, Vec::len);
        if n == 0 || equations.iter().any(|e| e.len() != n) {
            return Err(Error::shape("equations must carry the same, nonzero number of draws"));
        }
        for (i, e) in equations.iter().enumerate() {
            if e.iter().any(|d| d.beta0.len() != k + i || d.state_last.len() != k + i) {
                return Err(Error::shape(format!("equation {i} draws have the wrong length")));
            }
        }
        Ok(Self {
            equations,
            k,
            lags,
            intercept,
        })
    }

    pub fn m(&self) -> usize {
        self.equations.len()
    }

    pub fn n_draws(&self) -> usize {
        self.equations[0].len()
    }

    pub fn has_sparse(&self) -> bool {
        self.equations.iter().all(|e| e.iter().all(|d| d.sparse.is_some()))
    }

    /// The regressor vector for the period after `history` (rows are time).
    pub fn next_regressors(&self, history: &DMatrix<f64>) -> Result<Vec<f64>> {
        let (t_len, m) = history.shape();
        if m != self.m() || t_len < self.lags {
            return Err(Error::shape("history is too short or has the wrong width"));
        }
        let mut x = Vec::with_capacity(self.k);
        for p in 1..=self.lags {
            x.extend(history.row(t_len - p).iter().copied());
        }
        if self.intercept {
            x.push(1.0);
        }
        Ok(x)
    }
}

/// Common random numbers for one draw's forecast path.
struct Innovations {
    states: Vec<Vec<Vec<f64>>>,
    vols: Vec<Vec<f64>>,
    ys: Vec<Vec<f64>>,
}

impl Innovations {
    fn draw<R: Rng + ?Sized>(post: &VarPosterior, horizon: usize, rng: &mut R) -> Self {
        let m = post.m();
        let states = (0..horizon)
            .map(|_| (0..m).map(|i| (0..post.k + i).map(|_| std_normal(rng)).collect()).collect())
            .collect();
        let vols = (0..horizon).map(|_| (0..m).map(|_| std_normal(rng)).collect()).collect();
        let ys = (0..horizon.saturating_sub(1)).map(|_| (0..m).map(|_| std_normal(rng)).collect()).collect();
        Self { states, vols, ys }
    }
}

/// Raw and (if available) sparsified predictive of draw `d`, `horizon`
/// steps after the end of `history`.
pub fn draw_predictive<R: Rng + ?Sized>(
    post: &VarPosterior,
    d: usize,
    history: &DMatrix<f64>,
    horizon: usize,
    mode: VolForecast,
    rng: &mut R,
) -> Result<(PredictiveDraw, Option<PredictiveDraw>)> {
    if horizon == 0 {
        return Err(Error::usage("forecast horizon must be at least 1"));
    }
    let innov = Innovations::draw(post, horizon, rng);
    let raw = simulate_path(post, d, history, horizon, mode, false, &innov)?;
    let sparse = if post.has_sparse() {
        Some(simulate_path(post, d, history, horizon, mode, true, &innov)?)
    } else {
        None
    };
    Ok((raw, sparse))
}

fn simulate_path(
    post: &VarPosterior,
    d: usize,
    history: &DMatrix<f64>,
    horizon: usize,
    mode: VolForecast,
    sparse: bool,
    innov: &Innovations,
) -> Result<PredictiveDraw> {
    let m = post.m();
    let draws: Vec<&EquationDraw> = post.equations.iter().map(|e| &e[d]).collect();
    let mut states: Vec<Vec<f64>> = draws.iter().map(|e| e.state_last.clone()).collect();
    let mut logvol: Vec<Option<f64>> = draws
        .iter()
        .map(|e| match e.vol {
            VolDraw::Sv { h_last, .. } => Some(h_last),
            VolDraw::Constant(_) => None,
        })
        .collect();
    // rolling window of the last `lags` observations, most recent last
    let mut window = history.rows(history.nrows() - post.lags, post.lags).into_owned();
    for step in 0..horizon {
        let mut coefs = Vec::with_capacity(m);
        let mut vars = Vec::with_capacity(m);
        for (i, e) in draws.iter().enumerate() {
            let (b0, sv) = if sparse {
                let (b, s) = e.sparse.as_ref().expect("checked by has_sparse");
                (b, s)
            } else {
                (&e.beta0, &e.sqrt_v)
            };
            if mode == VolForecast::Simulate {
                for (s, z) in states[i].iter_mut().zip(&innov.states[step][i]) {
                    *s += z;
                }
            }
            coefs.push(b0.iter().zip(sv).zip(&states[i]).map(|((b, v), s)| b + v * s).collect::<Vec<_>>());
            vars.push(match (&e.vol, logvol[i].as_mut()) {
                (VolDraw::Constant(s2), _) => *s2,
                (VolDraw::Sv { mu, rho, sig_eta2, .. }, Some(h)) => {
                    if mode == VolForecast::Simulate {
                        *h = mu + rho * (*h - mu) + sig_eta2.sqrt() * innov.vols[step][i];
                    }
                    h.exp().max(1e-300)
                }
                (VolDraw::Sv { .. }, None) => unreachable!("log-volatility initialised for SV draws"),
            });
        }
        let x = post.next_regressors(&window)?;
        let (b_red, a_inv) = reduced_form(&coefs, post.k)?;
        let mean = &b_red * DVector::from_vec(x);
        let h = DMatrix::from_diagonal(&DVector::from_vec(vars.clone()));
        if step + 1 == horizon {
            let cov = &a_inv * h * a_inv.transpose();
            return Ok(PredictiveDraw {
                mean,
                cov: (&cov + cov.transpose()) * 0.5,
            });
        }
        // y = mean + A⁻¹ H^{1/2} z
        let z = DVector::from_iterator(m, vars.iter().zip(&innov.ys[step]).map(|(v, z)| v.sqrt() * z));
        let y_next = mean + &a_inv * z;
        let mut next = DMatrix::zeros(post.lags, m);
        for r in 1..post.lags {
            next.set_row(r - 1, &window.row(r));
        }
        next.set_row(post.lags - 1, &y_next.transpose());
        window = next;
    }
    unreachable!("horizon is at least one")
}

/// Multivariate normal log density.
pub fn mvn_ln_pdf(x: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<f64> {
    let n = x.len();
    let chol = cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::numerical("predictive covariance is not positive definite"))?;
    let diff = x - mean;
    let sol = chol.l().solve_lower_triangular(&diff).expect("Cholesky factor is nonsingular");
    let log_det: f64 = chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>() * 2.0;
    Ok(-0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + sol.norm_squared()))
}

/// `log(mean(exp(v)))`, computed stably.
pub fn log_mean_exp(v: &[f64]) -> f64 {
    let mx = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !mx.is_finite() {
        return mx;
    }
    mx + (v.iter().map(|x| (x - mx).exp()).sum::<f64>() / v.len() as f64).ln()
}

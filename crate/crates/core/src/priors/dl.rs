use rand::Rng;
use statrs::function::gamma::ln_gamma;

use super::{MhTracker, PriorVariance, ALPHA_ABS_FLOOR};
use crate::dist::{
    gamma, sample_gig, sample_inv_gaussian, sample_truncated_normal, truncated_normal_ln_mass, GigParams,
    InvGaussParams,
};
use crate::error::{Error, Result};

/// Dirichlet–Laplace hyperparameters.
///
/// Prior: `α_j ~ N(0, ω_j ξ_j² ζ²)`, `ω_j ~ Exp(1/2)`, `ξ ~ Dir(a, …, a)`,
/// `ζ ~ Gamma(n·a, 1/2)` and `a ~ U(1/n, 1/2)` for `n` coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct DlState {
    pub omega: Vec<f64>,
    pub xi: Vec<f64>,
    pub zeta: f64,
    pub a: f64,
    pub mh_scale: f64,
    pub tracker: MhTracker,
}

/// Support of `a`, or `None` when it is empty (fewer than three coefficients)
/// and `a` stays at 1/2.
fn a_bounds(n: usize) -> Option<(f64, f64)> {
    let lo = 1.0 / n as f64;
    (lo < 0.5).then_some((lo, 0.5))
}

impl DlState {
    pub fn new(n: usize) -> Self {
        let a = a_bounds(n).map_or(0.5, |(lo, hi)| 0.5 * (lo + hi));
        Self {
            omega: vec![1.0; n],
            xi: vec![1.0 / n as f64; n],
            zeta: n as f64,
            a,
            mh_scale: 0.05,
            tracker: MhTracker::default(),
        }
    }

    pub fn sample_prior<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let mut s = Self::new(n);
        if let Some((lo, hi)) = a_bounds(n) {
            s.a = lo + (hi - lo) * rng.gen::<f64>();
        }
        let mut g = Vec::with_capacity(n);
        for _ in 0..n {
            g.push(gamma(s.a, 1.0, rng)?.max(f64::MIN_POSITIVE));
        }
        s.xi = normalize(g)?;
        s.zeta = gamma(n as f64 * s.a, 0.5, rng)?;
        for w in s.omega.iter_mut() {
            *w = gamma(1.0, 0.5, rng)?;
        }
        Ok(s)
    }

    /// One sweep: `ξ | α`, then `ζ | ξ, α`, then `ω | ξ, ζ, α`, then the MH
    /// step for `a`. The first three form a single exact draw of the
    /// scale block given `α` and `a`.
    pub fn update<R: Rng + ?Sized>(&mut self, alpha: &[f64], rng: &mut R) -> Result<()> {
        let n = self.omega.len();
        if alpha.len() != n {
            return Err(Error::shape(format!("DL state has {n} coefficients, alpha has {}", alpha.len())));
        }
        let abs: Vec<f64> = alpha.iter().map(|x| x.abs().max(ALPHA_ABS_FLOOR)).collect();

        let mut t = Vec::with_capacity(n);
        for &aj in &abs {
            t.push(sample_gig(&GigParams::new(self.a - 1.0, 1.0, 2.0 * aj)?, rng)?.max(f64::MIN_POSITIVE));
        }
        self.xi = normalize(t)?;

        self.zeta = sample_gig(&zeta_conditional(self.a, &self.xi, &abs)?, rng)?;

        // 1/ω_j ~ iG(ζ ξ_j / |α_j|, 1)
        for ((w, &xj), &aj) in self.omega.iter_mut().zip(&self.xi).zip(&abs) {
            let mu = (self.zeta * xj / aj).max(f64::MIN_POSITIVE);
            *w = 1.0 / sample_inv_gaussian(&InvGaussParams::new(mu, 1.0)?, rng)?;
        }

        self.update_a(rng)
    }

    fn update_a<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let Some((lo, hi)) = a_bounds(self.omega.len()) else {
            self.a = 0.5;
            return Ok(());
        };
        let s = self.mh_scale;
        let prop = sample_truncated_normal(self.a, s, lo, hi, rng)?;
        let log_acc = self.log_target_a(prop) - self.log_target_a(self.a)
            + truncated_normal_ln_mass(self.a, s, lo, hi)
            - truncated_normal_ln_mass(prop, s, lo, hi);
        let accept = rng.gen::<f64>().ln() < log_acc;
        if accept {
            self.a = prop;
        }
        self.tracker.record(accept);
        Ok(())
    }

    /// `log p(a | ξ, ζ)` up to a constant: the `Γ(n·a)` factors of the
    /// Dirichlet and Gamma densities cancel.
    fn log_target_a(&self, a: f64) -> f64 {
        let n = self.xi.len() as f64;
        let sum_ln_xi: f64 = self.xi.iter().map(|x| x.ln()).sum();
        -n * ln_gamma(a) + (a - 1.0) * sum_ln_xi + n * a * (0.5 * self.zeta).ln()
    }

    pub fn variance(&self) -> PriorVariance {
        let z2 = self.zeta * self.zeta;
        PriorVariance::from_raw(self.omega.iter().zip(&self.xi).map(|(w, x)| w * x * x * z2))
    }
}

/// `ζ | ξ, α ~ GIG(n(a − 1), 1, 2 Σ |α_j| / ξ_j)`.
fn zeta_conditional(a: f64, xi: &[f64], abs: &[f64]) -> Result<GigParams> {
    let b: f64 = abs.iter().zip(xi).map(|(aj, xj)| aj / xj).sum();
    GigParams::new(xi.len() as f64 * (a - 1.0), 1.0, 2.0 * b)
}

fn normalize(t: Vec<f64>) -> Result<Vec<f64>> {
    let sum: f64 = t.iter().sum();
    if !(sum > 0.0 && sum.is_finite()) {
        return Err(Error::numerical(format!("DL simplex renormalization failed (sum {sum})")));
    }
    Ok(t.into_iter().map(|x| x / sum).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::RngStream;

    #[test]
    fn variance_arithmetic() {
        let mut s = DlState::new(2);
        s.omega = vec![1.0, 1.0];
        s.xi = vec![0.5, 0.5];
        s.zeta = 2.0;
        assert_eq!(s.variance().diag, vec![1.0, 1.0]);
    }

    #[test]
    fn two_coefficients_fix_a_at_half() {
        let mut s = DlState::new(2);
        assert_eq!(s.a, 0.5);
        let mut rng = RngStream::new(1, 0);
        for _ in 0..50 {
            s.update(&[1.0, -1.0], &mut rng).unwrap();
            assert_eq!(s.a, 0.5);
        }
    }

    #[test]
    fn zeta_conditional_for_unit_alphas() {
        // a = 1/2, ξ = (1/2, 1/2), |α| = (1, 1): ζ ~ GIG(-1, 1, 4)
        let g = zeta_conditional(0.5, &[0.5, 0.5], &[1.0, 1.0]).unwrap();
        assert_eq!((g.p, g.a, g.b), (-1.0, 1.0, 8.0));
    }

    #[test]
    fn simplex_and_bounds_hold() {
        let mut s = DlState::new(6);
        let mut rng = RngStream::new(7, 0);
        let alpha = [0.0, 1e-14, 0.3, -2.0, 5.0, 1e-3];
        for _ in 0..2000 {
            s.update(&alpha, &mut rng).unwrap();
            let sum: f64 = s.xi.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(s.xi.iter().all(|x| *x >= 0.0));
            assert!(s.a > 1.0 / 6.0 && s.a < 0.5);
            assert!(s.variance().diag.iter().all(|v| *v > 0.0 && v.is_finite()));
        }
    }

    #[test]
    fn floored_alpha_shrinks_hard() {
        // with |α_j| floored at 1e-10 the mean of 1/ω_j is ζ ξ_j · 1e10
        let mut rng = RngStream::new(3, 0);
        let (zeta, xi) = (0.5, 0.25);
        let mu = zeta * xi / ALPHA_ABS_FLOOR;
        let n = 20_000;
        let omega: Vec<f64> = (0..n)
            .map(|_| 1.0 / sample_inv_gaussian(&InvGaussParams::new(mu, 1.0).unwrap(), &mut rng).unwrap())
            .collect();
        assert!(omega.iter().all(|w| w.is_finite() && *w > 0.0));
        // E[1/X] = 1/μ + 1/λ and Var[1/X] = 1/(μλ) + 2/λ² for X ~ iG(μ, λ)
        let mean = omega.iter().sum::<f64>() / n as f64;
        let se = ((1.0 / mu + 2.0) / n as f64).sqrt();
        assert!((mean - (1.0 / mu + 1.0)).abs() < 4.0 * se, "{mean}");
        let mut s = DlState::new(4);
        s.update(&[0.0, 0.0, 0.0, 0.0], &mut rng).unwrap();
        assert!(s.variance().diag.iter().all(|v| *v < 1e-6));
    }

    #[test]
    fn mismatched_length_is_rejected() {
        let mut s = DlState::new(3);
        assert!(s.update(&[1.0], &mut RngStream::new(0, 0)).is_err());
    }
}

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::PriorVariance;
use crate::dist::{inv_gamma, normal_ln_pdf, StandardDist};
use crate::error::{Error, Result};

/// Fixed hyperparameters of the normal mixture of inverse-Gamma prior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NmigHyper {
    /// Variance ratio of the spike component.
    pub c: f64,
    pub d_tau: f64,
    pub e_tau: f64,
    pub d_p: f64,
    pub e_p: f64,
}

impl Default for NmigHyper {
    fn default() -> Self {
        Self {
            c: 2.5e-5,
            d_tau: 5.0,
            e_tau: 4.0,
            d_p: 1.0,
            e_p: 1.0,
        }
    }
}

/// Spike-and-slab state: `α_j ~ N(0, τ_j² (δ_j + (1 − δ_j) c))`,
/// `δ_j ~ Bernoulli(p̲)`, `τ_j² ~ IG(d_τ, e_τ)`, `p̲ ~ Beta(d_p, e_p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NmigState {
    pub delta: Vec<bool>,
    pub tau2: Vec<f64>,
    pub p_incl: f64,
    pub hyper: NmigHyper,
}

/// Posterior probability of the slab for one coefficient.
pub fn nmig_inclusion_probability(alpha: f64, tau2: f64, p_incl: f64, c: f64) -> f64 {
    let l1 = p_incl.ln() + normal_ln_pdf(alpha, 0.0, tau2);
    let l0 = (1.0 - p_incl).ln() + normal_ln_pdf(alpha, 0.0, c * tau2);
    1.0 / (1.0 + (l0 - l1).exp())
}

impl NmigState {
    pub fn new(n: usize, hyper: NmigHyper) -> Self {
        Self {
            delta: vec![true; n],
            tau2: vec![1.0; n],
            p_incl: 0.5,
            hyper,
        }
    }

    pub fn sample_prior<R: Rng + ?Sized>(n: usize, hyper: NmigHyper, rng: &mut R) -> Result<Self> {
        let mut s = Self::new(n, hyper);
        let h = &s.hyper;
        s.p_incl = StandardDist::Beta { a: h.d_p, b: h.e_p }.sample(rng)?;
        for (d, t) in s.delta.iter_mut().zip(s.tau2.iter_mut()) {
            *d = rng.gen::<f64>() < s.p_incl;
            *t = inv_gamma(h.d_tau, h.e_tau, rng)?;
        }
        Ok(s)
    }

    fn spike_scale(&self, j: usize) -> f64 {
        if self.delta[j] {
            1.0
        } else {
            self.hyper.c
        }
    }

    pub fn update<R: Rng + ?Sized>(&mut self, alpha: &[f64], rng: &mut R) -> Result<()> {
        let n = self.delta.len();
        if alpha.len() != n {
            return Err(Error::shape(format!("NMIG state has {n} coefficients, alpha has {}", alpha.len())));
        }
        for (j, &a) in alpha.iter().enumerate() {
            let p = nmig_inclusion_probability(a, self.tau2[j], self.p_incl, self.hyper.c);
            self.delta[j] = rng.gen::<f64>() < p;
        }
        for (j, &a) in alpha.iter().enumerate() {
            let s = self.spike_scale(j);
            self.tau2[j] = inv_gamma(self.hyper.d_tau + 0.5, self.hyper.e_tau + a * a / (2.0 * s), rng)?;
        }
        let k = self.delta.iter().filter(|d| **d).count() as f64;
        self.p_incl = StandardDist::Beta {
            a: self.hyper.d_p + k,
            b: self.hyper.e_p + n as f64 - k,
        }
        .sample(rng)?;
        Ok(())
    }

    pub fn variance(&self) -> PriorVariance {
        PriorVariance::from_raw((0..self.delta.len()).map(|j| self.tau2[j] * self.spike_scale(j)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::RngStream;

    #[test]
    fn inclusion_probability_at_zero() {
        // ratio of N(0; 0, τ²) and N(0; 0, cτ²) densities is √c, independent of τ²
        for tau2 in [0.3, 1.0, 7.0] {
            let p = nmig_inclusion_probability(0.0, tau2, 0.5, 0.1);
            let oracle = 1.0 / (1.0 + 1.0 / 0.1f64.sqrt());
            assert!((p - oracle).abs() < 1e-12);
            assert!((p - 0.2403).abs() < 1e-4);
        }
        assert_eq!(nmig_inclusion_probability(0.3, 1.0, 0.0, 0.1), 0.0);
        assert_eq!(nmig_inclusion_probability(0.3, 1.0, 1.0, 0.1), 1.0);
    }

    #[test]
    fn spike_variance() {
        let mut s = NmigState::new(2, NmigHyper::default());
        s.delta = vec![false, true];
        s.tau2 = vec![1.0, 2.0];
        assert_eq!(s.variance().diag, vec![2.5e-5, 2.0]);
    }

    #[test]
    fn all_included_gives_beta_five_one() {
        // with every δ_j = 1 and 2K = 4, p̲ ~ Beta(5, 1) with mean 5/6
        let mut rng = RngStream::new(9, 0);
        let n = 20_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let mut s = NmigState::new(4, NmigHyper::default());
            // large α keeps every δ at 1 with overwhelming probability
            s.update(&[5.0, -5.0, 5.0, 5.0], &mut rng).unwrap();
            assert!(s.delta.iter().all(|d| *d));
            acc += s.p_incl;
        }
        let mean = acc / n as f64;
        let se = (5.0 / (36.0 * 7.0) / n as f64).sqrt();
        assert!((mean - 5.0 / 6.0).abs() < 4.0 * se, "{mean}");
    }

    #[test]
    fn tau_conditional_in_slab_at_zero() {
        // α = 0, δ = 1: τ² ~ IG(5.5, 4), mean 4/4.5
        let mut rng = RngStream::new(10, 0);
        let n = 40_000;
        let mut acc = 0.0;
        let mut sq = 0.0;
        for _ in 0..n {
            let mut s = NmigState::new(1, NmigHyper::default());
            s.p_incl = 1.0;
            s.update(&[0.0], &mut rng).unwrap();
            acc += s.tau2[0];
            sq += s.tau2[0] * s.tau2[0];
        }
        let mean = acc / n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!((mean - 4.0 / 4.5).abs() < 4.0 * (var / n as f64).sqrt(), "{mean}");
    }
}

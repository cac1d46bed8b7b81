use rand::Rng;

use super::PriorVariance;
use crate::dist::inv_gamma;
use crate::error::{Error, Result};

/// Horseshoe hyperparameters in the auxiliary-variable form:
/// `α_j ~ N(0, φ_j λ)`, `φ_j | ν_j ~ IG(1/2, 1/ν_j)`, `λ | ϕ ~ IG(1/2, 1/ϕ)`,
/// `ν_j, ϕ ~ IG(1/2, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HsState {
    pub phi: Vec<f64>,
    pub lam: f64,
    pub nu: Vec<f64>,
    pub vphi: f64,
}

impl HsState {
    pub fn new(n: usize) -> Self {
        Self {
            phi: vec![1.0; n],
            lam: 1.0,
            nu: vec![1.0; n],
            vphi: 1.0,
        }
    }

    pub fn sample_prior<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let mut s = Self::new(n);
        s.vphi = inv_gamma(0.5, 1.0, rng)?;
        s.lam = inv_gamma(0.5, 1.0 / s.vphi, rng)?;
        for (p, v) in s.phi.iter_mut().zip(s.nu.iter_mut()) {
            *v = inv_gamma(0.5, 1.0, rng)?;
            *p = inv_gamma(0.5, 1.0 / *v, rng)?;
        }
        Ok(s)
    }

    pub fn update<R: Rng + ?Sized>(&mut self, alpha: &[f64], rng: &mut R) -> Result<()> {
        if alpha.len() != self.phi.len() {
            return Err(Error::shape(format!(
                "HS state has {} coefficients, alpha has {}",
                self.phi.len(),
                alpha.len()
            )));
        }
        for ((p, &nu), &a) in self.phi.iter_mut().zip(&self.nu).zip(alpha) {
            let (shape, scale) = phi_conditional(nu, a, self.lam);
            *p = inv_gamma(shape, scale, rng)?;
        }
        let (shape, scale) = lambda_conditional(self.vphi, alpha, &self.phi);
        self.lam = inv_gamma(shape, scale, rng)?;
        for (v, &p) in self.nu.iter_mut().zip(&self.phi) {
            *v = inv_gamma(1.0, 1.0 + 1.0 / p, rng)?;
        }
        self.vphi = inv_gamma(1.0, 1.0 + 1.0 / self.lam, rng)?;
        Ok(())
    }

    pub fn variance(&self) -> PriorVariance {
        PriorVariance::from_raw(self.phi.iter().map(|p| p * self.lam))
    }
}

/// `φ_j | α_j, λ, ν_j ~ IG(1, 1/ν_j + α_j²/(2λ))`, as (shape, scale).
fn phi_conditional(nu: f64, alpha: f64, lam: f64) -> (f64, f64) {
    (1.0, 1.0 / nu + alpha * alpha / (2.0 * lam))
}

/// `λ | α, φ, ϕ ~ IG((n + 1)/2, 1/ϕ + ½ Σ α_j²/φ_j)`, as (shape, scale).
fn lambda_conditional(vphi: f64, alpha: &[f64], phi: &[f64]) -> (f64, f64) {
    let ss: f64 = alpha.iter().zip(phi).map(|(a, p)| a * a / p).sum();
    ((alpha.len() as f64 + 1.0) / 2.0, 1.0 / vphi + 0.5 * ss)
}

//! Signal adaptive variable selection applied draw by draw.
//!
//! For each coefficient the penalty is `κ_j = |α_j|⁻²` and the sparsified
//! value is the one-pass coordinate-descent soft threshold
//!
//! ```text
//! γ̄_j = sign(α_j) · ‖Z_j‖⁻² · max(|α_j|·‖Z_j‖² − κ_j, 0)
//! ```
//!
//! so `γ̄_j = 0` exactly when `|α_j|³ ‖Z_j‖² ≤ 1`.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SparsifiedDraw {
    pub gamma_bar: Vec<f64>,
    pub mask: Vec<bool>,
}

impl SparsifiedDraw {
    pub fn n_retained(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }
}

/// Sparsify a single coefficient.
pub fn savs_coefficient(alpha: f64, col_sq_norm: f64) -> f64 {
    if alpha == 0.0 || !(col_sq_norm > 0.0) {
        return 0.0;
    }
    let abs = alpha.abs();
    if abs * abs * abs * col_sq_norm <= 1.0 {
        return 0.0;
    }
    // |α| − κ/‖Z‖², kept strictly positive at the rounding boundary
    let shrunk = abs - 1.0 / (abs * abs * col_sq_norm);
    alpha.signum() * shrunk.max(f64::MIN_POSITIVE)
}

pub fn savs_sparsify(alpha: &[f64], col_sq_norms: &[f64]) -> Result<SparsifiedDraw> {
    if alpha.len() != col_sq_norms.len() {
        return Err(Error::shape(format!(
            "alpha has {} entries but {} column norms were supplied",
            alpha.len(),
            col_sq_norms.len()
        )));
    }
    let gamma_bar: Vec<f64> = alpha
        .iter()
        .zip(col_sq_norms)
        .map(|(&a, &n)| savs_coefficient(a, n))
        .collect();
    let mask = gamma_bar.iter().map(|g| *g != 0.0).collect();
    Ok(SparsifiedDraw { gamma_bar, mask })
}

/// Posterior inclusion probabilities: per-coefficient retention frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct PipTable {
    pub pip: Vec<f64>,
    pub n_draws: usize,
}

/// Running retention counts, for streaming use.
#[derive(Clone, Debug, Default)]
pub struct PipCounter {
    counts: Vec<u64>,
    n_draws: usize,
}

impl PipCounter {
    pub fn new(dim: usize) -> Self {
        Self {
            counts: vec![0; dim],
            n_draws: 0,
        }
    }

    pub fn push(&mut self, mask: &[bool]) -> Result<()> {
        if self.n_draws == 0 && self.counts.is_empty() {
            self.counts = vec![0; mask.len()];
        }
        if mask.len() != self.counts.len() {
            return Err(Error::shape(format!(
                "mask of length {} does not match {} coefficients",
                mask.len(),
                self.counts.len()
            )));
        }
        for (c, m) in self.counts.iter_mut().zip(mask) {
            *c += u64::from(*m);
        }
        self.n_draws += 1;
        Ok(())
    }

    pub fn finish(&self) -> Result<PipTable> {
        if self.n_draws == 0 {
            return Err(Error::usage("cannot compute PIPs from zero draws"));
        }
        Ok(PipTable {
            pip: self.counts.iter().map(|&c| c as f64 / self.n_draws as f64).collect(),
            n_draws: self.n_draws,
        })
    }
}

pub fn compute_pips<'a, I>(draws: I) -> Result<PipTable>
where
    I: IntoIterator<Item = &'a SparsifiedDraw>,
{
    let mut counter = PipCounter::default();
    for d in draws {
        counter.push(&d.mask)?;
    }
    counter.finish()
}

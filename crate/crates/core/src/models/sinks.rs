use nalgebra::DMatrix;

use super::{DrawRecord, DrawSink, DrawTable, ErrorVariance};
use crate::error::{Error, Result};
use crate::savs::{PipCounter, PipTable};
use crate::state_space::StateTrajectory;

/// Adapter turning a closure into a sink.
pub struct FnSink<F>(pub F);

impl<F: FnMut(&DrawRecord<'_>) -> Result<()>> DrawSink for FnSink<F> {
    fn accept(&mut self, record: &DrawRecord<'_>) -> Result<()> {
        (self.0)(record)
    }
}

/// An owned copy of the parts of a draw most callers need.
#[derive(Clone, Debug, PartialEq)]
pub struct StoredDraw {
    pub alpha: Vec<f64>,
    pub gamma: Option<Vec<f64>>,
    pub mask: Option<Vec<bool>>,
    pub variance: ErrorVariance,
    pub global: Option<f64>,
    pub states: Option<StateTrajectory>,
}

/// Keeps every record in memory. Meant for tests and small runs.
#[derive(Clone, Debug, Default)]
pub struct CollectSink {
    pub keep_states: bool,
    pub draws: Vec<StoredDraw>,
}

impl CollectSink {
    pub fn with_states() -> Self {
        Self {
            keep_states: true,
            draws: Vec::new(),
        }
    }
}

impl DrawSink for CollectSink {
    fn accept(&mut self, r: &DrawRecord<'_>) -> Result<()> {
        self.draws.push(StoredDraw {
            alpha: r.alpha_flat(),
            gamma: r.sparsified.map(|s| s.gamma_bar.clone()),
            mask: r.sparsified.map(|s| s.mask.clone()),
            variance: r.variance.clone(),
            global: r.prior.global_scale(),
            states: self.keep_states.then(|| r.states.clone()),
        });
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct PipSink(pub PipCounter);

impl PipSink {
    pub fn finish(&self) -> Result<PipTable> {
        self.0.finish()
    }
}

impl DrawSink for PipSink {
    fn accept(&mut self, r: &DrawRecord<'_>) -> Result<()> {
        let sp = r
            .sparsified
            .ok_or_else(|| Error::usage("PIPs need a run with sparsification enabled"))?;
        self.0.push(&sp.mask)
    }
}

/// Stores reconstructed `β` paths (single precision) for pointwise
/// posterior quantiles of the raw and sparsified posteriors.
#[derive(Clone, Debug)]
pub struct PathQuantileSink {
    t_len: usize,
    n: usize,
    n_draws: usize,
    raw: Vec<f32>,
    sparse: Vec<f32>,
}

/// Pointwise quantiles of `β_jt`: one `T × K` matrix per probability.
#[derive(Clone, Debug, PartialEq)]
pub struct PathQuantiles {
    pub probs: Vec<f64>,
    pub raw: Vec<DMatrix<f64>>,
    pub sparse: Option<Vec<DMatrix<f64>>>,
    pub n_draws: usize,
}

impl PathQuantileSink {
    pub fn new(t_len: usize, n: usize) -> Self {
        Self {
            t_len,
            n,
            n_draws: 0,
            raw: Vec::new(),
            sparse: Vec::new(),
        }
    }

    pub fn n_draws(&self) -> usize {
        self.n_draws
    }

    pub fn finish(&self, probs: &[f64]) -> Result<PathQuantiles> {
        if self.n_draws == 0 {
            return Err(Error::usage("no draws were recorded"));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::domain("quantile probabilities must lie in [0, 1]"));
        }
        let raw = self.quantiles_of(&self.raw, probs);
        let sparse = (!self.sparse.is_empty()).then(|| self.quantiles_of(&self.sparse, probs));
        Ok(PathQuantiles {
            probs: probs.to_vec(),
            raw,
            sparse,
            n_draws: self.n_draws,
        })
    }

    fn quantiles_of(&self, store: &[f32], probs: &[f64]) -> Vec<DMatrix<f64>> {
        let block = self.t_len * self.n;
        let mut out = vec![DMatrix::zeros(self.t_len, self.n); probs.len()];
        let mut buf = vec![0.0; self.n_draws];
        for t in 0..self.t_len {
            for j in 0..self.n {
                let cell = t * self.n + j;
                for (d, b) in buf.iter_mut().enumerate() {
                    *b = f64::from(store[d * block + cell]);
                }
                buf.sort_unstable_by(f64::total_cmp);
                for (m, &p) in out.iter_mut().zip(probs) {
                    m[(t, j)] = sorted_quantile(&buf, p);
                }
            }
        }
        out
    }
}

impl DrawSink for PathQuantileSink {
    fn accept(&mut self, r: &DrawRecord<'_>) -> Result<()> {
        if r.states.t_len() != self.t_len || r.states.n() != self.n {
            return Err(Error::shape("draw does not match the path store dimensions"));
        }
        let push = |store: &mut Vec<f32>, path: &DMatrix<f64>| {
            for t in 0..path.nrows() {
                store.extend(path.row(t).iter().map(|v| *v as f32));
            }
        };
        push(&mut self.raw, &r.beta_path(false).expect("raw path always exists"));
        match r.beta_path(true) {
            Some(p) => push(&mut self.sparse, &p),
            None if !self.sparse.is_empty() => return Err(Error::usage("sparsification switched off mid-run")),
            None => {}
        }
        self.n_draws += 1;
        Ok(())
    }
}

/// Linear-interpolation quantile (type 7) of already sorted values.
pub fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Collects draws column-wise for the binary draw file.
#[derive(Clone, Debug)]
pub struct DrawTableSink {
    labels: Vec<String>,
    columns: Vec<Vec<f64>>,
    prefix: String,
}

impl DrawTableSink {
    /// `coef_labels` name the entries of `α` in prior order; `prefix` is
    /// prepended to every column (e.g. the equation name).
    pub fn new(coef_labels: &[String], prefix: &str) -> Self {
        Self {
            labels: coef_labels.to_vec(),
            columns: Vec::new(),
            prefix: prefix.to_string(),
        }
    }

    fn header(&self, r: &DrawRecord<'_>) -> Vec<String> {
        let p = &self.prefix;
        let mut h: Vec<String> = self.labels.iter().map(|l| format!("{p}{l}")).collect();
        if r.sparsified.is_some() {
            h.extend(self.labels.iter().map(|l| format!("{p}sparse:{l}")));
        }
        match r.variance {
            ErrorVariance::Constant(_) => h.push(format!("{p}sigma2")),
            ErrorVariance::Sv(_) => {
                for name in ["sv_mu", "sv_rho", "sv_sig_eta2", "sv_h_last"] {
                    h.push(format!("{p}{name}"));
                }
            }
        }
        if r.prior.global_scale().is_some() {
            h.push(format!("{p}global_scale"));
        }
        h
    }

    pub fn into_table(self) -> Result<DrawTable> {
        if self.columns.is_empty() {
            return Err(Error::usage("no draws were recorded"));
        }
        DrawTable::new(self.labels, self.columns)
    }
}

impl DrawSink for DrawTableSink {
    fn accept(&mut self, r: &DrawRecord<'_>) -> Result<()> {
        let mut row = r.alpha_flat();
        if row.len() != self.labels.len() && self.columns.is_empty() {
            return Err(Error::shape(format!(
                "{} labels for a coefficient vector of length {}",
                self.labels.len(),
                row.len()
            )));
        }
        if let Some(sp) = r.sparsified {
            row.extend_from_slice(&sp.gamma_bar);
        }
        match r.variance {
            ErrorVariance::Constant(s2) => row.push(*s2),
            ErrorVariance::Sv(sv) => row.extend([sv.mu, sv.rho, sv.sig_eta2, *sv.h.last().unwrap_or(&sv.mu)]),
        }
        if let Some(g) = r.prior.global_scale() {
            row.push(g);
        }
        if self.columns.is_empty() {
            self.labels = self.header(r);
            self.columns = vec![Vec::new(); row.len()];
        }
        if row.len() != self.columns.len() {
            return Err(Error::shape("draw layout changed mid-run"));
        }
        for (c, v) in self.columns.iter_mut().zip(row) {
            c.push(v);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(sorted_quantile(&v, 0.0), 1.0);
        assert_eq!(sorted_quantile(&v, 1.0), 4.0);
        assert!((sorted_quantile(&v, 0.5) - 2.5).abs() < 1e-15);
        assert!((sorted_quantile(&v, 0.05) - 1.15).abs() < 1e-12);
        assert_eq!(sorted_quantile(&[7.0], 0.3), 7.0);
    }
}

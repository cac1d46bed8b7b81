use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Mean absolute error over all `(t, j)`, times 100.
pub fn evaluate_mae(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64> {
    if estimate.shape() != truth.shape() || truth.is_empty() {
        return Err(Error::shape(format!(
            "estimate is {:?} but truth is {:?}",
            estimate.shape(),
            truth.shape()
        )));
    }
    let s: f64 = estimate.iter().zip(truth.iter()).map(|(a, b)| (a - b).abs()).sum();
    Ok(100.0 * s / truth.len() as f64)
}

/// Percentage of true-zero positions that are zero in the estimate,
/// averaged over the supplied retention masks (`true` = kept nonzero).
pub fn evaluate_hit_rate<'a, I>(masks: I, truth_zero: &[bool]) -> Result<f64>
where
    I: IntoIterator<Item = &'a [bool]>,
{
    let n_zero = truth_zero.iter().filter(|z| **z).count();
    if n_zero == 0 {
        return Err(Error::usage("hit rate is undefined without true zeros"));
    }
    let mut total = 0.0;
    let mut n = 0usize;
    for m in masks {
        if m.len() != truth_zero.len() {
            return Err(Error::shape("mask and truth have different lengths"));
        }
        let hits = m.iter().zip(truth_zero).filter(|(kept, z)| **z && !**kept).count();
        total += hits as f64 / n_zero as f64;
        n += 1;
    }
    if n == 0 {
        return Err(Error::usage("no masks supplied"));
    }
    Ok(100.0 * total / n as f64)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `sqrt(mean(e²))`.
pub fn rmse(errors: &[f64]) -> f64 {
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

/// Kolmogorov–Smirnov statistic of a sample against Uniform(0, 1) and its
/// asymptotic p-value (with the Stephens small-sample correction).
pub fn ks_uniform(sample: &[f64]) -> (f64, f64) {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let d = s
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let u = u.clamp(0.0, 1.0);
            ((i + 1) as f64 / n - u).max(u - i as f64 / n)
        })
        .fold(0.0, f64::max);
    (d, kolmogorov_sf((n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d))
}

/// `P(K > x)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

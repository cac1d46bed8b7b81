use statrs::distribution::{Beta, ContinuousCDF, Exp, Gamma, Normal};
use tvp_sparse::dist::{
    sample_gig, sample_inv_gaussian, GigParams, InvGaussParams, RngStream, StandardDist,
};

const N: usize = 100_000;

/// Asymptotic KS critical value at significance `alpha`.
fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

fn ks_stat(mut draws: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    draws.sort_by(f64::total_cmp);
    let n = draws.len() as f64;
    draws
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// GIG density tabulated on a log grid; CDF and mean by trapezoid sums.
struct GigQuadrature {
    x: Vec<f64>,
    cdf: Vec<f64>,
    mean: f64,
}

impl GigQuadrature {
    fn new(p: f64, a: f64, b: f64) -> Self {
        let m = 400_000;
        let (lo, hi) = (-40.0_f64, 40.0_f64);
        let h = (hi - lo) / m as f64;
        let u: Vec<f64> = (0..=m).map(|i| lo + i as f64 * h).collect();
        let logf: Vec<f64> = u.iter().map(|&u| p * u - 0.5 * (a * u.exp() + b * (-u).exp())).collect();
        let top = logf.iter().cloned().fold(f64::MIN, f64::max);
        // density in u = log x is x · f(x) = exp(p u − …)
        let g: Vec<f64> = logf.iter().map(|l| (l - top).exp()).collect();
        let mut cdf = vec![0.0; m + 1];
        let (mut z, mut first) = (0.0, 0.0);
        for i in 1..=m {
            z += 0.5 * h * (g[i] + g[i - 1]);
            first += 0.5 * h * (g[i] * u[i].exp() + g[i - 1] * u[i - 1].exp());
            cdf[i] = z;
        }
        cdf.iter_mut().for_each(|c| *c /= z);
        Self {
            x: u.iter().map(|u| u.exp()).collect(),
            cdf,
            mean: first / z,
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        let i = self.x.partition_point(|v| *v < x);
        if i == 0 {
            return 0.0;
        }
        if i >= self.x.len() {
            return 1.0;
        }
        let (x0, x1) = (self.x[i - 1].ln(), self.x[i].ln());
        let w = (x.ln() - x0) / (x1 - x0);
        self.cdf[i - 1] + w * (self.cdf[i] - self.cdf[i - 1])
    }
}

fn gig_draws(p: f64, a: f64, b: f64, seed: u64) -> Vec<f64> {
    let params = GigParams::new(p, a, b).unwrap();
    let mut rng = RngStream::new(seed, 0);
    (0..N).map(|_| sample_gig(&params, &mut rng).unwrap()).collect()
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[test]
fn gig_mean_matches_quadrature() {
    let q = GigQuadrature::new(-0.5, 1.0, 1.0);
    // inverse Gaussian with mean sqrt(b/a) = 1
    assert!((q.mean - 1.0).abs() < 1e-6, "quadrature mean {}", q.mean);
    let (m, se) = mean_and_se(&gig_draws(-0.5, 1.0, 1.0, 1));
    assert!((m - q.mean).abs() < 3.0 * se, "mean {m} vs {} (se {se})", q.mean);
}

#[test]
fn gig_ks_against_quadrature_cdf() {
    let crit = ks_critical(N, 1e-3);
    for (i, &(p, a, b)) in [
        (-0.5, 1.0, 1.0),
        (2.0, 3.0, 0.5),
        (0.05, 0.5, 2.0),
        (-3.0, 0.0, 2.0),
        (1.5, 1e-3, 40.0),
        (-12.0, 8.0, 0.2),
        (30.0, 2.0, 2.0),
    ]
    .iter()
    .enumerate()
    {
        let q = GigQuadrature::new(p, a, b);
        let d = ks_stat(gig_draws(p, a, b, 10 + i as u64), |x| q.cdf(x));
        assert!(d < crit, "GIG({p}, {a}, {b}): D = {d} >= {crit}");
    }
}

#[test]
fn gig_gamma_limit_at_tiny_b() {
    let draws = gig_draws(2.0, 3.0, 1e-8, 3);
    let (m, se) = mean_and_se(&draws);
    assert!((m - 4.0 / 3.0).abs() < 3.0 * se);
    let second = draws.iter().map(|x| x * x).sum::<f64>() / N as f64;
    // Gamma(2, 1.5): E X² = k(k+1)/r² = 6/2.25
    assert!((m / (4.0 / 3.0) - 1.0).abs() < 0.02);
    assert!((second / (6.0 / 2.25) - 1.0).abs() < 0.02, "{second}");
    let gamma = Gamma::new(2.0, 1.5).unwrap();
    assert!(ks_stat(draws, |x| gamma.cdf(x)) < ks_critical(N, 1e-3));
}

#[test]
fn gig_inverse_gamma_limit_at_tiny_a() {
    // a → 0 with p < 0: 1/X ~ Gamma(−p, b/2)
    let draws = gig_draws(-3.0, 1e-8, 2.0, 4);
    let (m, _) = mean_and_se(&draws);
    assert!((m / 0.5 - 1.0).abs() < 0.02, "{m}");
    let gamma = Gamma::new(3.0, 1.0).unwrap();
    let inv: Vec<f64> = draws.iter().map(|x| 1.0 / x).collect();
    assert!(ks_stat(inv, |x| gamma.cdf(x)) < ks_critical(N, 1e-3));
}

#[test]
fn gig_moments_move_continuously_toward_the_gamma_limit() {
    let mut prev = f64::NAN;
    for (i, b) in [1e-2, 1e-4, 1e-6, 1e-8].into_iter().enumerate() {
        let (m, _) = mean_and_se(&gig_draws(2.0, 3.0, b, 20 + i as u64));
        if prev.is_finite() {
            assert!((m - prev).abs() < 0.02, "jump at b={b}: {prev} -> {m}");
        }
        prev = m;
    }
}

#[test]
fn inverse_gaussian_ks() {
    let (mu, lam) = (2.0, 1.0);
    let params = InvGaussParams::new(mu, lam).unwrap();
    let mut rng = RngStream::new(5, 0);
    let draws: Vec<f64> = (0..N).map(|_| sample_inv_gaussian(&params, &mut rng).unwrap()).collect();
    let phi = Normal::new(0.0, 1.0).unwrap();
    let cdf = |x: f64| {
        let r = (lam / x).sqrt();
        phi.cdf(r * (x / mu - 1.0)) + (2.0 * lam / mu).exp() * phi.cdf(-r * (x / mu + 1.0))
    };
    assert!(ks_stat(draws, cdf) < ks_critical(N, 1e-3));
}

#[test]
fn standard_families_ks() {
    let crit = ks_critical(N, 1e-3);
    let cases: Vec<(StandardDist, Box<dyn Fn(f64) -> f64>)> = vec![
        (StandardDist::Gamma { shape: 0.3, rate: 2.0 }, {
            let d = Gamma::new(0.3, 2.0).unwrap();
            Box::new(move |x| d.cdf(x))
        }),
        (StandardDist::InvGamma { shape: 3.0, scale: 2.0 }, {
            let d = Gamma::new(3.0, 2.0).unwrap();
            Box::new(move |x| 1.0 - d.cdf(1.0 / x))
        }),
        (StandardDist::Beta { a: 25.0, b: 5.0 }, {
            let d = Beta::new(25.0, 5.0).unwrap();
            Box::new(move |x| d.cdf(x))
        }),
        (StandardDist::Exponential { rate: 0.5 }, {
            let d = Exp::new(0.5).unwrap();
            Box::new(move |x| d.cdf(x))
        }),
        (StandardDist::Normal { mean: 1.0, var: 4.0 }, {
            let d = Normal::new(1.0, 2.0).unwrap();
            Box::new(move |x| d.cdf(x))
        }),
        (StandardDist::Uniform { lo: -1.0, hi: 3.0 }, Box::new(|x| ((x + 1.0) / 4.0).clamp(0.0, 1.0))),
    ];
    for (i, (dist, cdf)) in cases.into_iter().enumerate() {
        let mut rng = RngStream::new(6, i as u64);
        let draws: Vec<f64> = (0..N).map(|_| dist.sample(&mut rng).unwrap()).collect();
        let d = ks_stat(draws, cdf);
        assert!(d < crit, "{dist:?}: D = {d}");
    }
}

#[test]
fn streams_are_bit_reproducible() {
    let params = GigParams::new(0.5, 2.0, 1.0).unwrap();
    let a: Vec<u64> = {
        let mut r = RngStream::new(77, 3);
        (0..100).map(|_| sample_gig(&params, &mut r).unwrap().to_bits()).collect()
    };
    let b: Vec<u64> = {
        let mut r = RngStream::new(77, 3);
        (0..100).map(|_| sample_gig(&params, &mut r).unwrap().to_bits()).collect()
    };
    assert_eq!(a, b);
}

//! Fit a sparse TVP regression on simulated data and report SAVS results.
use tvp_sparse::dist::RngStream;
use tvp_sparse::experiments::{generate_dgp, DgpConfig};
use tvp_sparse::models::{fit_tvp_regression, PathQuantileSink, PipSink, Profile, RegressionSpec, SamplerSettings};
use tvp_sparse::priors::{PriorConfig, PriorKind};

fn main() -> tvp_sparse::Result<()> {
    let cfg = DgpConfig { k: 10, t_len: 200, sparsity: 0.7, replications: 1, seed: 1 };
    let data = generate_dgp(&cfg, &mut RngStream::new(1, 0))?;
    let mut settings = SamplerSettings::default().with_profile(Profile::Desk);
    settings.n_draws = 3_000;
    settings.n_burn = 1_000;
    let spec = RegressionSpec { y: data.y.clone(), x: data.x.clone(), prior: PriorConfig::new(PriorKind::Hs), settings };

    let mut paths = PathQuantileSink::new(cfg.t_len, cfg.k);
    let mut pips = PipSink::default();
    let summary = fit_tvp_regression(&spec, &mut RngStream::new(1, 1), &mut (&mut paths, &mut pips))?;
    let q = paths.finish(&[0.5])?;
    let pips = pips.finish()?;

    let truth = data.alpha.to_flat();
    println!("kept {} draws", summary.n_kept);
    println!("{:>6} {:>9} {:>6}", "coef", "true", "PIP");
    for (j, (t, p)) in truth.iter().zip(&pips.pip).enumerate() {
        let name = if j < cfg.k { format!("b{j}") } else { format!("sv{}", j - cfg.k) };
        println!("{name:>6} {t:>+9.3} {p:>6.2}");
    }
    let sparse = &q.sparse.as_ref().expect("SAVS is on")[0];
    let last = cfg.t_len - 1;
    println!("median beta at T, raw vs sparse:");
    for j in 0..cfg.k {
        println!("  b{j}: {:+.3} {:+.3} (true {:+.3})", q.raw[0][(last, j)], sparse[(last, j)], data.beta[(last, j)]);
    }
    Ok(())
}

//! Recover a log-volatility path from simulated residuals.
use tvp_sparse::dist::{std_normal, RngStream};
use tvp_sparse::stochvol::{simulate_h, sv_sweep, SvPrior, SvState};

fn main() -> tvp_sparse::Result<()> {
    let mut rng = RngStream::new(11, 0);
    let t_len = 500;
    let h = simulate_h(t_len, -1.0, 0.95, 0.05, &mut rng);
    let eps: Vec<f64> = h.iter().map(|h| (h / 2.0).exp() * std_normal(&mut rng)).collect();

    let prior = SvPrior::default();
    let mut state = SvState::from_residuals(&eps);
    let (mut mu, mut rho, mut s2, mut kept) = (0.0, 0.0, 0.0, 0.0);
    let mut h_mean = vec![0.0; t_len];
    for it in 0..4_000 {
        sv_sweep(&eps, &mut state, &prior, &mut rng)?;
        if it >= 1_000 {
            mu += state.mu;
            rho += state.rho;
            s2 += state.sig_eta2;
            h_mean.iter_mut().zip(&state.h).for_each(|(m, h)| *m += h);
            kept += 1.0;
        }
    }
    println!("mu {:.3} (true -1), rho {:.3} (true 0.95), sig_eta2 {:.3} (true 0.05)", mu / kept, rho / kept, s2 / kept);
    let err: f64 = h_mean.iter().zip(&h).map(|(m, h)| (m / kept - h).abs()).sum::<f64>() / t_len as f64;
    println!("mean absolute error of the h path: {err:.3}");
    Ok(())
}

//! Draw from the generalized inverse Gaussian and compare with its mean.
use tvp_sparse::dist::{sample_gig, GigParams, RngStream};

fn main() -> tvp_sparse::Result<()> {
    let mut rng = RngStream::new(42, 0);
    for (p, a, b) in [(-0.5, 1.0, 1.0), (2.0, 3.0, 1e-8), (-3.0, 0.0, 2.0), (0.3, 4.0, 0.2)] {
        let params = GigParams::new(p, a, b)?;
        let n = 50_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += sample_gig(&params, &mut rng)?;
        }
        println!("GIG(p={p}, a={a}, b={b}): sample mean {:.4}", sum / n as f64);
    }
    Ok(())
}

//! Shrinkage under each global-local prior for a fixed coefficient vector.
use tvp_sparse::dist::RngStream;
use tvp_sparse::priors::{PriorConfig, PriorKind, PriorState};

fn main() -> tvp_sparse::Result<()> {
    let alpha = [1.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.01, -0.02];
    for kind in [PriorKind::Dl, PriorKind::Ng, PriorKind::Lasso, PriorKind::Hs, PriorKind::Nmig] {
        let mut rng = RngStream::new(3, 0);
        let mut state = PriorState::new(&PriorConfig::new(kind), alpha.len());
        let mut avg = vec![0.0; alpha.len()];
        let n = 2_000;
        for _ in 0..n {
            state.update(&alpha, &mut rng)?;
            for (a, v) in avg.iter_mut().zip(&state.variance().diag) {
                *a += v / n as f64;
            }
        }
        let shown: Vec<String> = avg.iter().map(|v| format!("{v:.2e}")).collect();
        println!("{:>5}: prior variances {}", kind.as_str(), shown.join(" "));
    }
    Ok(())
}

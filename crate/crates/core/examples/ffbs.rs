//! Joint draws of the non-centered states with both state samplers.
use nalgebra::DMatrix;
use tvp_sparse::dist::{std_normal, RngStream};
use tvp_sparse::state_space::{draw_states_into, FfbsWorkspace, NcParamVector, StateSampler, StateTrajectory};

fn main() -> tvp_sparse::Result<()> {
    let mut rng = RngStream::new(7, 0);
    let (t_len, k) = (100, 2);
    let w = DMatrix::from_fn(t_len, k, |_, _| std_normal(&mut rng));
    let alpha = NcParamVector::regression(vec![0.5, -0.2], vec![0.1, 0.0])?;
    // true states for the first coefficient
    let mut walk = 0.0;
    let y: Vec<f64> = (0..t_len)
        .map(|t| {
            walk += std_normal(&mut rng);
            (0.5 + 0.1 * walk) * w[(t, 0)] - 0.2 * w[(t, 1)] + 0.3 * std_normal(&mut rng)
        })
        .collect();
    let obs_var = vec![0.09; t_len];

    let mut ws = FfbsWorkspace::default();
    ws.set_regressors(&w);
    for method in [StateSampler::CarterKohn, StateSampler::DurbinKoopman] {
        let mut out = StateTrajectory::zeros(t_len, k);
        let mut mean_last = 0.0;
        let n = 2_000;
        for _ in 0..n {
            draw_states_into(method, &y, &alpha, &obs_var, &mut ws, &mut out, &mut rng)?;
            mean_last += out.get(t_len - 1, 0) / n as f64;
        }
        println!("{method:?}: posterior mean of the last state {mean_last:.3} (truth {walk:.3})");
    }
    Ok(())
}

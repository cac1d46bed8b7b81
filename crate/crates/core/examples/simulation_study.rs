//! A small Monte Carlo study comparing priors with and without SAVS.
use tvp_sparse::experiments::{run_study, summarize_cells, SparsityLevel, StudyGrid};
use tvp_sparse::models::SamplerSettings;
use tvp_sparse::priors::PriorKind;

fn main() -> tvp_sparse::Result<()> {
    let grid = StudyGrid {
        k: vec![10],
        t_len: vec![100],
        sparsity: vec![SparsityLevel::Sparse, SparsityLevel::Dense],
        priors: vec![PriorKind::Dl, PriorKind::Hs],
        replications: 3,
    };
    let mut settings = SamplerSettings::default();
    settings.n_draws = 1_500;
    settings.n_burn = 500;
    let results = run_study(&grid, &settings, 2024)?;
    println!("{:>9} {:>5} {:>8} {:>8} {:>8}", "sparsity", "prior", "mae_raw", "mae_sp", "hits");
    for c in summarize_cells(&results) {
        let f = |v: Option<f64>| v.map_or("-".into(), |v| format!("{v:.3}"));
        println!(
            "{:>9} {:>5} {:>8} {:>8} {:>8}",
            c.sparsity.as_str(),
            c.prior.as_str(),
            f(c.mae_raw),
            f(c.mae_sparse),
            f(c.hit_rate)
        );
    }
    Ok(())
}

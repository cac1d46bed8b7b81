//! Recursive one-step forecasts of a simulated TVP-VAR-SV against white noise.
use tvp_sparse::dist::RngStream;
use tvp_sparse::experiments::{
    generate_var_dgp, relative_metrics, run_forecast_exercise, summarize_forecasts, white_noise_forecasts,
    ForecastModel, ForecastTask, VarDgpConfig,
};
use tvp_sparse::models::SamplerSettings;
use tvp_sparse::priors::{PriorConfig, PriorKind};
use tvp_sparse::stochvol::VolForecast;

fn main() -> tvp_sparse::Result<()> {
    let cfg = VarDgpConfig { t_len: 150, ..VarDgpConfig::default() };
    let sim = generate_var_dgp(&cfg, &mut RngStream::new(5, 0))?;
    let task = ForecastTask {
        horizons: vec![1],
        origin: 140,
        focus: Vec::new(),
        lags: 2,
        propagation: VolForecast::default(),
    };
    let mut settings = SamplerSettings::default();
    settings.n_draws = 1_500;
    settings.n_burn = 500;
    settings.sv = true;
    let model = ForecastModel { label: "dl".into(), prior: PriorConfig::new(PriorKind::Dl), settings };

    let records = run_forecast_exercise(&sim.y, &sim.names, &task, &model, 5)?;
    let bench = white_noise_forecasts(&sim.y, &sim.names, &task, "wn")?;
    let rel = relative_metrics(&summarize_forecasts(&records, "dl"), &summarize_forecasts(&bench, "wn"))?;
    for row in rel {
        let tag = if row.sparsified { "sparse" } else { "raw" };
        println!("{:>6} {:>12} {:>10} {:+.4}", tag, row.variable, row.metric, row.value);
    }
    Ok(())
}

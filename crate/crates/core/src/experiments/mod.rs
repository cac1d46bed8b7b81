//! Simulation study and recursive forecast evaluation.

mod data;
mod dgp;
mod forecasting;
mod metrics;
mod study;
mod transform;

pub use data::{Manifest, ManifestEntry, ModelSize, Panel};
pub use dgp::{
    draw_sparse_alpha, generate_dgp, generate_var_dgp, simulate_regression, zero_count, DgpConfig,
    SimulatedRegression, SimulatedVar, SparsityLevel, VarDgpConfig, DGP_BETA_SD, DGP_SIGMA, DGP_SQRT_V_SD,
};
pub use forecasting::{
    period_trajectory, relative_metrics, run_forecast_exercise, summarize_forecasts, white_noise_forecasts,
    ForecastModel, ForecastRecord, ForecastTask, MetricRow, PeriodRow, JOINT_FOCUS,
};
pub use metrics::{evaluate_hit_rate, evaluate_mae, kolmogorov_sf, ks_uniform, mean, rmse};
pub use study::{
    data_stream, mcmc_stream, run_study, score_replication, summarize_cells, CellSummary, ReplicationResult,
    ReplicationScore, StudyGrid,
};
pub use transform::{apply_transform, TransformCode};

pub(crate) use data::csv_err;

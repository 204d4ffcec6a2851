//! Experiment orchestration: data files, temporal splits, metrics,
//! bootstrap intervals, the two forecasting pipelines and the loading-rate
//! study.

mod config;
mod data;
mod experiment;
mod metrics;
mod rate;

pub use config::{parse_key_values, ExperimentConfig, RankSpec};
pub use data::{
    split, train_len, Dataset, DTYPE_F64_BE, DTYPE_F64_LE, SERIES_MAGIC, SERIES_VERSION,
};
pub use experiment::{
    fit_factor_stage, last_value_mse, run_fattnn, run_raw_tcn_baseline, ExperimentReport,
    FactorStage, PhaseTimings,
};
pub use metrics::{bootstrap_ci, median, mse, per_sample_errors};
pub use rate::{
    format_rate_table, loading_errors, max_sin_theta, run_rate_study, RateRow, RateStudy,
};

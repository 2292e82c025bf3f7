//! Monte Carlo harness: estimator × density × n × replicate grids, seed
//! derivation, CSV records and log-log rate fits.

mod config;
mod rate;
mod run;

pub use config::{BenchConfig, EstimatorId};
pub use rate::{bias_summary, cell_rmse, fit_rate, write_rate_csv, BiasSummary, RateFit};
pub use run::{
    cell_seed, read_records, run_bench, run_bench_resume, run_estimator, splitmix64, write_records, ExperimentRecord,
    CSV_HEADER,
};

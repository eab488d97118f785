//! Experiment harness: configuration files, repeated runs with CSV output,
//! slope tables, and the lag and budget-shift experiments.

mod config;
mod experiment;
mod lag;
mod shift;

pub use config::{ExperimentConfig, RunMode, SlopeCheck, SEED_ENV};
pub use experiment::{
    aggregate, aggregate_reports, run_experiment, run_once, run_parallel, write_trace_csv, ExperimentOutcome, SlopeRow,
    SlopeTable, AGGREGATE_COLUMNS,
};
pub use lag::{lag_necessity_experiment, LagExperiment, LagReport, LagRow};
pub use shift::{budget_shift_experiment, crossing, ShiftExperiment, ShiftLevel, ShiftReport};

//! Experiment orchestration: seeded trial batches, metric registry,
//! aggregation, persisted results and reports.

mod config;
mod registry;
mod report;
mod runner;

pub use config::ExperimentConfig;
pub use registry::{base_name, MetricKind, MetricScope, RIGIDITY_RANGE, RIGIDITY_STEP, RIGIDITY_WINDOW, TAIL_EXPONENT};
pub use report::{compare_to_free, summarize, summarize_dir, FreeComparisonInputs, FreeComparisonRow, Report};
pub use runner::{
    aggregate_rows, parse_metrics_csv, quantile, read_manifest, replay_trial, run_experiment, run_trials,
    threshold_verdicts, write_metrics_csv, Aggregate, Manifest, MetricRow, RowStatus, RunRecord, TrialFailure,
    Verdict, METRICS_HEADER, REFERENCE_SALT, SEED_RULE,
};

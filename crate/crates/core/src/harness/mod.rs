//! Seeded experiment runner: trials, regret against hindsight benchmarks,
//! summary statistics, result files, sweeps and self-test suites.

mod io;
mod learner;
mod run;
pub mod selftest;
mod spec;
mod sweep;

pub use io::{
    format_trial_csv, parse_trial_csv, read_summary, read_trial_csv, write_results, ResultFormat,
    TRIAL_CSV_HEADER,
};
pub use learner::{resolve_params, Learner, ResolvedParams, RoundInput};
pub use run::{
    compute_job_regrets, compute_regrets, run_experiment, run_trial, summarize, Experiment, Metadata,
    MetricStats, Summary, TrialResult,
};
pub use spec::{
    default_rounds, parse_config, read_config, Benchmark, ConfigMap, ExperimentSpec, FeedbackMode,
    NoiseMode, PolicySpec, Setting,
};
pub use sweep::{format_sweep_csv, run_sweep, SweepCell, SWEEP_CSV_HEADER};

//! Config-driven experiment runner.

mod config;
mod output;
mod runner;

pub use config::{AgentKind, ExperimentConfig, ExperimentKind, SweepParam};
pub use output::{
    emit_results, emit_sweep, episodes_csv, format_float, runs_csv, summary_csv, CONFIG_FILE, EPISODES_FILE,
    META_FILE, RUNS_FILE, SUMMARY_FILE,
};
pub use runner::{
    build_agent, build_truth, check_bounds, play, run_all, run_experiment, run_single, sweep, BoundReport,
    ResultTable, RunSummary, SweepResult, SweepRow,
};

//! Experiment orchestration: configs, the training loop, sweeps, reports.

mod config;
mod report;
mod run;
mod sweep;

pub use config::{
    BudgetConfig, ControllerId, EnvId, GridConfig, LagrangianConfig, LearnerId, PiOptions,
    PiSignal, SauteOptions, TabularConfig, TrainConfig,
};
pub use report::{line_plot, report};
pub use run::{
    cost_statistic, find_runs, read_epochs_csv, resolve_grid, run_experiment, target_violation,
    EpochStats, RunSummary, CSV_HEADER,
};
pub use sweep::{mean_std, summary_csv, sweep, SweepJob, SweepRow};

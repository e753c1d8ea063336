//! Metrics, learning-curve and optimizer-iteration experiments, experiment
//! configuration and the command-line front end.

pub mod cli;
pub mod config;
mod experiments;
mod metrics;

pub use experiments::{
    cell_seed, evaluate, iterations_report, learning_curve, log_durations, trajectory_spearman, AggregateRow,
    IterationsConfig, IterationsRow, LearningCurvePoint, ResultTable,
};
pub use metrics::{average_ranks, nrmse, spearman, spearman_matrix};

//! Experiment configuration, sweep execution and CSV output.

pub mod config;
pub mod output;
pub mod runner;

pub use config::{DistCount, ExperimentConfig, LambdaScaling, Mode};
pub use output::{emit_csv, write_csv, BoundsRow, CsvRow, LossRow, StalenessRow};
pub use runner::{
    resolve_lambda, run, run_bounds, run_staleness, run_staleness_point, run_training,
    run_training_point, sweep_points, SweepPoint,
};

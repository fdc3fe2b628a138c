//! Experiment plumbing: config, closed-loop runs with attack injection,
//! per-step scoring, threshold sweeps, file output and the CLI.

pub mod cli;
mod config;
mod experiment;
mod metrics;
mod output;
mod preprocess;
mod sweep;

pub use config::{
    AttackSection, EstimatorChoice, FilterSection, LearnerSection, RunConfig, RunSection, ScenarioSection,
    SweepSection, TargetLists,
};
pub use experiment::{run_experiment, train_model, EstimatorKind, EstimatorRun, ExperimentOutput, StepRecord};
pub use metrics::{score, ConfusionMetrics, StepLabel};
pub use output::{
    metrics_json, report_json, to_json_bytes, write_atomic, write_run_csv, write_sweep_csv, RUN_CSV_HEADER,
    SCHEMA_VERSION, SWEEP_CSV_HEADER,
};
pub use preprocess::unify_control;
pub use sweep::{best_row, rescore, sweep_thresholds, SweepRow};

use thiserror::Error;

use crate::attacks::AttackError;
use crate::detector::DetectorError;
use crate::estimators::EstimatorError;
use crate::learner::LearnError;
use crate::vehicle_sim::SimError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("{estimator} failed at step {step}: {source}")]
    Step { estimator: &'static str, step: usize, source: EstimatorError },
    #[error("scoring: {0}")]
    Metrics(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl HarnessError {
    /// Errors a user fixes by editing the config or command line.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Self::Config(_) | Self::Attack(_) | Self::Detector(_))
            || matches!(self, Self::Sim(SimError::InvalidParam { .. } | SimError::InvalidScenario(_)))
            || matches!(self, Self::Learn(LearnError::InvalidConfig(_)))
    }
}

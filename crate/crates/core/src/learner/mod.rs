//! Learned longitudinal dynamics: a 5→20→1 ReLU network trained offline on
//! simulator logs and adapted online through a residual-gated step size.

mod io;
mod mlp;
mod online;
mod process;
mod train;

pub use io::{model_from_str, model_to_string};
pub use mlp::{Adam, MlpInput, MlpModel, HIDDEN_DIM, INPUT_DIM, PARAM_COUNT};
pub use online::{adaptive_rate, OnlineAdaptConfig, OnlineAdapter, OnlineStep};
pub use process::{as_process_model, MlpProcess};
pub use train::{
    mse, remove_outliers, samples_from_log, split_sizes, train_offline, write_loss_csv, EpochLoss, TrainConfig,
    TrainReport, TrainingSample,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LearnError {
    #[error("not enough training data after preprocessing: {have} samples, need {need}")]
    InsufficientData { have: usize, need: usize },
    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("malformed weight file: {0}")]
    Format(String),
}

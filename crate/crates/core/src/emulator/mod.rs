//! The learned stand-in for the physical station: a monotone
//! power-to-outflow model, a linear level-transition model, and the
//! one-step environment the control policy trains against.

pub mod clean;
pub mod env;
pub mod level;
pub mod outflow;
pub mod reward;

pub use clean::{clean_training_records, CLEAN_WINDOW_MINUTES};
pub use env::{
    env_step, EnvState, StateNorm, StepExo, StepOutcome, FORECAST_BLOCK, FORECAST_HORIZONS,
    FORECAST_QUANTILES, STATE_DIM,
};
pub use level::{fit_level, LevelFitReport, LevelModel};
pub use outflow::{fit_outflow, OutflowFitReport, OutflowModel};
pub use reward::{reward, RewardConfig, RewardParts};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmulatorError {
    #[error("not enough training data: need {needed}, got {got}")]
    NotEnoughData { needed: usize, got: usize },
    #[error("bad hyperparameters: {0}")]
    BadHyperparameters(String),
    #[error("fit failed: {0}")]
    FitFailed(String),
}

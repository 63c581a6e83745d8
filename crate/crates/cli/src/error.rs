//! Error kinds mapped onto process exit codes.

use thiserror::Error;

/// 0 success, 1 validation, 2 runtime, 3 acceptance-target miss.
#[derive(Debug, Error)]
pub enum AppError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("target miss: {0}")]
    TargetMiss(String),
}

impl AppError {
    pub fn validation(msg: impl Into<String>) -> Self {
        Self::Validation(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        Self::Runtime(msg.into())
    }

    pub fn target_miss(msg: impl Into<String>) -> Self {
        Self::TargetMiss(msg.into())
    }

    pub fn from_plant(e: pumpstation::plant::PlantError) -> Self {
        use pumpstation::plant::PlantError;
        match e {
            PlantError::Config(_) | PlantError::Domain(_) => Self::Validation(e.to_string()),
            _ => Self::Runtime(e.to_string()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 1,
            Self::Runtime(_) => 2,
            Self::TargetMiss(_) => 3,
        }
    }
}

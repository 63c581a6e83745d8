//! Weight checkpoints as versioned JSON.

use super::nn::Mlp;
use super::policy::{PolicyNet, ValueNet};
use super::AgentError;
use crate::io::{load_versioned, save_versioned};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CHECKPOINT_SCHEMA: &str = "pumpstation/checkpoint/v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkDoc {
    /// Input size followed by each layer's output size.
    pub layer_sizes: Vec<usize>,
    /// Row-major weights and biases, layer by layer.
    pub params: Vec<f64>,
}

impl NetworkDoc {
    fn from_mlp(mlp: &Mlp) -> Self {
        Self {
            layer_sizes: mlp.layer_sizes(),
            params: mlp.to_flat(),
        }
    }

    fn into_mlp(self) -> Result<Mlp, AgentError> {
        let mut rng = crate::seeds::rng_for(0, "checkpoint-shape");
        let mut mlp = Mlp::new(&self.layer_sizes, &mut rng);
        if mlp.param_count() != self.params.len() {
            return Err(AgentError::BadCheckpoint(format!(
                "parameter count {} does not match layout {:?}",
                self.params.len(),
                self.layer_sizes
            )));
        }
        mlp.set_flat(&self.params);
        Ok(mlp)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub iteration: usize,
    /// True when the policy was trained with the forecast block zeroed.
    pub forecast_masked: bool,
    pub policy: NetworkDoc,
    pub value: NetworkDoc,
}

impl Checkpoint {
    pub fn capture(
        policy: &PolicyNet,
        value: &ValueNet,
        iteration: usize,
        forecast_masked: bool,
    ) -> Self {
        Self {
            iteration,
            forecast_masked,
            policy: NetworkDoc::from_mlp(&policy.mlp),
            value: NetworkDoc::from_mlp(&value.mlp),
        }
    }

    pub fn restore(self) -> Result<(PolicyNet, ValueNet), AgentError> {
        Ok((
            PolicyNet {
                mlp: self.policy.into_mlp()?,
            },
            ValueNet {
                mlp: self.value.into_mlp()?,
            },
        ))
    }

    pub fn save(&self, path: &Path) -> Result<(), AgentError> {
        save_versioned(path, CHECKPOINT_SCHEMA, self)
            .map_err(|e| AgentError::BadCheckpoint(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, AgentError> {
        load_versioned(path, CHECKPOINT_SCHEMA)
            .map_err(|e| AgentError::BadCheckpoint(e.to_string()))
    }
}

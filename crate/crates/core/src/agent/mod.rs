//! The control learner: a Beta-policy network over per-pump set-points,
//! a value network, truncated advantage estimation and clipped-surrogate
//! updates.

pub mod beta;
pub mod checkpoint;
pub mod gae;
pub mod nn;
pub mod policy;
pub mod ppo;

pub use checkpoint::{Checkpoint, NetworkDoc, CHECKPOINT_SCHEMA};
pub use gae::gae_truncated;
pub use nn::{Adam, Mlp};
pub use policy::{action_to_kw, BetaParams, PolicyNet, ValueNet, HIDDEN, POLICY_OUT};
pub use ppo::{ppo_update, PpoConfig, PpoOptimizer, RolloutBuffer, Transition, UpdateStats};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("non-finite network input")]
    NonFiniteInput,
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("empty rollout buffer")]
    EmptyBuffer,
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
}

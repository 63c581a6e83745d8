//! Synthetic pumping station: ground-truth pump curves, mass-balance tank,
//! seasonal/stormy intake, the fixed-rules benchmark controller and the
//! irregularly sampled historical dataset.

pub mod baseline;
pub mod config;
pub mod curve;
pub mod csvio;
pub mod intake;
pub mod irregular;
pub mod sim;
pub mod types;

pub use baseline::BaselineController;
pub use config::{PlantConfig, N_PUMPS};
pub use curve::ground_truth_outflow;
pub use csvio::{read_csv, write_csv};
pub use intake::generate_intake;
pub use irregular::irregularize;
pub use sim::{frequency_from_power, maintenance_schedule, simulate_plant, Controller, SimOutput};
pub use types::{quantize, IntakeSeries, RawRecord};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlantError {
    #[error("invalid plant configuration: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("io error on {0}: {1}")]
    Io(String, std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

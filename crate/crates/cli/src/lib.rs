//! Library surface of the workbench CLI: configuration, the stage
//! pipeline, and run-directory locking. The binary is a thin argument
//! parser over these functions, and the acceptance suite drives them
//! directly.

pub mod config;
pub mod error;
pub mod lock;
pub mod pipeline;

pub use config::RunConfig;
pub use error::AppError;
pub use lock::RunLock;

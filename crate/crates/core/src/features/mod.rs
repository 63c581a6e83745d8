//! Feature engineering: uniform resampling of the irregular intake series
//! and the lag/calendar/difference matrices behind the forecasting models.

pub mod derive;
pub mod matrix;
pub mod resample;

pub use derive::{change_over_time, growth_or_decay, GOD_EPSILON_M3H};
pub use matrix::{
    build_matrix, build_row, feature_names, schema_hash, FeatureTable, COL_COT, COL_GOD, COL_HOUR,
    COL_LAG24H, COL_MONTH, COL_WDAY, N_FEATURES, N_HORIZONS, N_LAGS,
};
pub use resample::{resample_uniform, Gap, UniformSeries, FILL_LIMIT_MINUTES};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("empty series")]
    EmptySeries,
    #[error("zero time delta between consecutive samples")]
    ZeroTimeDelta,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("bad argument: {0}")]
    BadArgument(String),
}

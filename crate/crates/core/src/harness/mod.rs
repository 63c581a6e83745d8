//! Episode construction, the train/test loop, the four evaluation
//! scenarios and the reward-weight trade-off scan.

pub mod episode;
pub mod report;
pub mod rollout;
pub mod scenario;
pub mod tradeoff;
pub mod train;

pub use episode::{make_episodes, randomize_initial_level, Episode, EpisodeSets};
pub use report::{energy_mwh, scenario_summary_csv, EpisodeBreakdown, ScenarioReport};
pub use rollout::{EmuEnv, EvalTrace, ForecastMode};
pub use scenario::{evaluate_scenarios, ScenarioKind};
pub use tradeoff::{tradeoff_scan, TradeoffEntry, WeightPair};
pub use train::{train, HarnessConfig, TrainLogRow, TrainOutput};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("no qualifying episode segment (need >= {min_len} contiguous steps)")]
    NoEpisodes { min_len: usize },
    #[error("need at least 2 episodes for a train/test split, found {0}")]
    TooFewEpisodes(usize),
    #[error("forecast error: {0}")]
    Forecast(#[from] crate::forecast::ForecastError),
    #[error("agent error: {0}")]
    Agent(#[from] crate::agent::AgentError),
    #[error("training diverged at iteration {iteration}; last good checkpoint kept")]
    Diverged { iteration: usize },
    #[error("{0}")]
    Other(String),
}

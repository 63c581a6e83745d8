//! Desk-scale workbench for data-driven predictive control of a wastewater
//! pumping station.
//!
//! The crate is organised as a pipeline:
//!
//! 1. [`plant`] — a synthetic but physically plausible pumping station
//!    (ground-truth pump curves, mass-balance tank, seasonal intake with
//!    storms, irregular SCADA-style sampling) that produces the historical
//!    dataset everything else consumes.
//! 2. [`features`] — uniform resampling and lag/calendar/difference feature
//!    matrices for the intake series.
//! 3. [`forecast`] — multi-horizon probabilistic intake forecasting (linear
//!    quantile regression and gradient-boosted trees with pinball loss),
//!    benchmarks and the full metric suite.
//! 4. [`emulator`] — the learned stand-in for the station: a monotone
//!    power-to-outflow model, a linear level-transition model, and the
//!    one-step environment used for control training.
//! 5. [`agent`] — PPO with a Beta policy over per-pump power set-points,
//!    truncated generalized advantage estimation and clipped-surrogate
//!    updates, on a hand-rolled feed-forward network.
//! 6. [`harness`] — episode construction, the train/test loop, the four
//!    evaluation scenarios and the reward-weight trade-off scan.

pub mod agent;
pub mod emulator;
pub mod features;
pub mod forecast;
pub mod harness;
pub mod io;
pub mod plant;
pub mod seeds;

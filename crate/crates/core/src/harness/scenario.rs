//! The four evaluation scenarios, sharing byte-identical episode inputs.

use super::episode::Episode;
use super::report::ScenarioReport;
use super::rollout::{rollout_policy_eval, rollout_rules_eval, EmuEnv, EvalTrace, ForecastMode};
use super::train::{trailing_quantiles, TrainOutput};
use super::HarnessError;
use crate::agent::Checkpoint;
use crate::plant::BaselineController;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// The fixed operating rules replayed through the emulator.
    Baseline,
    /// Trained policy with the forecast block zeroed.
    NoForecast,
    /// Trained policy with probabilistic forecasts.
    WithForecast,
    /// The with-forecast policy fed the observed future instead.
    PerfectForecast,
    /// A trade-off scan entry.
    AlarmsWeighted,
    EnergyWeighted,
}

impl ScenarioKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::Baseline => "baseline_rules",
            ScenarioKind::NoForecast => "rl_without_forecasts",
            ScenarioKind::WithForecast => "rl_with_forecasts",
            ScenarioKind::PerfectForecast => "rl_perfect_forecasts",
            ScenarioKind::AlarmsWeighted => "rl_alarm_weighted",
            ScenarioKind::EnergyWeighted => "rl_energy_weighted",
        }
    }
}

/// Evaluates one policy checkpoint over the episode set.
pub fn evaluate_policy(
    checkpoint: &Checkpoint,
    env: &EmuEnv,
    episodes: &[Episode],
    mode: ForecastMode,
    kind: ScenarioKind,
) -> Result<ScenarioReport, HarnessError> {
    let (policy, _) = checkpoint.clone().restore()?;
    let traces: Vec<EvalTrace> = episodes
        .iter()
        .map(|ep| rollout_policy_eval(&policy, env, ep, mode))
        .collect();
    Ok(ScenarioReport::from_traces(
        kind,
        &traces,
        env.plant.step_hours(),
    ))
}

/// Replays the fixed rules over the episode set.
pub fn evaluate_baseline(env: &EmuEnv, episodes: &[Episode]) -> ScenarioReport {
    let mut controller = BaselineController::new(env.plant.clone());
    let traces: Vec<EvalTrace> = episodes
        .iter()
        .map(|ep| rollout_rules_eval(&mut controller, env, ep))
        .collect();
    ScenarioReport::from_traces(ScenarioKind::Baseline, &traces, env.plant.step_hours())
}

/// Runs all four scenarios on identical inputs: the rules benchmark, the
/// no-forecast agent, the with-forecast agent, and the with-forecast agent
/// under perfect information.
pub fn evaluate_scenarios(
    with_forecast: &TrainOutput,
    without_forecast: &TrainOutput,
    env: &EmuEnv,
    episodes: &[Episode],
    trailing_fraction: f64,
) -> Result<Vec<ScenarioReport>, HarnessError> {
    let mut reports = Vec::with_capacity(4);
    reports.push(evaluate_baseline(env, episodes));

    let mut no_forecast = evaluate_policy(
        without_forecast.final_checkpoint(),
        env,
        episodes,
        ForecastMode::Zeroed,
        ScenarioKind::NoForecast,
    )?;
    no_forecast.trailing = trailing_quantiles(&without_forecast.log, trailing_fraction);
    reports.push(no_forecast);

    let mut with = evaluate_policy(
        with_forecast.final_checkpoint(),
        env,
        episodes,
        ForecastMode::Probabilistic,
        ScenarioKind::WithForecast,
    )?;
    with.trailing = trailing_quantiles(&with_forecast.log, trailing_fraction);
    reports.push(with);

    reports.push(evaluate_policy(
        with_forecast.final_checkpoint(),
        env,
        episodes,
        ForecastMode::Perfect,
        ScenarioKind::PerfectForecast,
    )?);
    Ok(reports)
}

/// Collects evaluation traces for the plot exports.
pub fn scenario_traces(
    checkpoint: &Checkpoint,
    env: &EmuEnv,
    episodes: &[Episode],
    mode: ForecastMode,
) -> Result<Vec<EvalTrace>, HarnessError> {
    let (policy, _) = checkpoint.clone().restore()?;
    Ok(episodes
        .iter()
        .map(|ep| rollout_policy_eval(&policy, env, ep, mode))
        .collect())
}

/// Baseline traces for the plot exports.
pub fn baseline_traces(env: &EmuEnv, episodes: &[Episode]) -> Vec<EvalTrace> {
    let mut controller = BaselineController::new(env.plant.clone());
    episodes
        .iter()
        .map(|ep| rollout_rules_eval(&mut controller, env, ep))
        .collect()
}

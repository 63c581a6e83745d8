//! Reward-weight trade-off scan: train one with-forecast agent per
//! (c1, c2) pair and evaluate each on the same held-out episodes.

use super::episode::Episode;
use super::rollout::{EmuEnv, ForecastMode};
use super::scenario::{evaluate_policy, ScenarioKind};
use super::train::{train, trailing_quantiles, HarnessConfig, TrainOutput};
use super::{HarnessError, ScenarioReport};
use crate::agent::PpoConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WeightPair {
    pub label: WeightLabel,
    pub c1: f64,
    pub c2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightLabel {
    Alarms,
    Energy,
}

impl WeightPair {
    /// The two weightings compared in the trade-off analysis: one
    /// prioritizing alarm avoidance, one emphasizing energy reduction.
    pub fn standard_pairs() -> Vec<WeightPair> {
        vec![
            WeightPair {
                label: WeightLabel::Alarms,
                c1: 1.0,
                c2: 0.5,
            },
            WeightPair {
                label: WeightLabel::Energy,
                c1: 0.5,
                c2: 1.0,
            },
        ]
    }

    fn scenario_kind(&self) -> ScenarioKind {
        match self.label {
            WeightLabel::Alarms => ScenarioKind::AlarmsWeighted,
            WeightLabel::Energy => ScenarioKind::EnergyWeighted,
        }
    }
}

pub struct TradeoffEntry {
    pub pair: WeightPair,
    pub training: TrainOutput,
    pub report: ScenarioReport,
}

/// Trains and evaluates one agent per weight pair. Identical pairs under
/// a fixed seed produce identical reports.
#[allow(clippy::too_many_arguments)]
pub fn tradeoff_scan(
    pairs: &[WeightPair],
    env_template: &EmuEnv,
    train_episodes: &[Episode],
    test_episodes: &[Episode],
    ppo: &PpoConfig,
    harness: &HarnessConfig,
    seed: u64,
) -> Result<Vec<TradeoffEntry>, HarnessError> {
    let mut out = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let mut reward = ppo.reward;
        reward.c1 = pair.c1;
        reward.c2 = pair.c2;
        let env = EmuEnv {
            outflow: env_template.outflow,
            level: env_template.level,
            plant: env_template.plant,
            reward,
        };
        let mut ppo_cfg = ppo.clone();
        ppo_cfg.reward = reward;
        let label = format!("tradeoff/{:?}/{}/{}", pair.label, pair.c1, pair.c2);
        let training = train(
            &env,
            train_episodes,
            test_episodes,
            ForecastMode::Probabilistic,
            &ppo_cfg,
            harness,
            seed,
            &label,
        )?;
        let mut report = evaluate_policy(
            training.final_checkpoint(),
            &env,
            test_episodes,
            ForecastMode::Probabilistic,
            pair.scenario_kind(),
        )?;
        report.trailing = trailing_quantiles(&training.log, harness.trailing_fraction);
        out.push(TradeoffEntry {
            pair: *pair,
            training,
            report,
        });
    }
    Ok(out)
}

//! Episode rollouts through the emulated environment, stochastic for
//! training and deterministic for evaluation.

use super::episode::Episode;
use crate::agent::{action_to_kw, PolicyNet, Transition, ValueNet};
use crate::emulator::{
    env_step, EnvState, LevelModel, OutflowModel, RewardConfig, StateNorm, StepExo,
    FORECAST_BLOCK, FORECAST_HORIZONS,
};
use crate::plant::{Controller, PlantConfig, N_PUMPS};
use rand_chacha::ChaCha12Rng;

/// The emulated station bundle shared by every rollout.
pub struct EmuEnv<'a> {
    pub outflow: &'a OutflowModel,
    pub level: &'a LevelModel,
    pub plant: &'a PlantConfig,
    pub reward: RewardConfig,
}

impl<'a> EmuEnv<'a> {
    pub fn norm(&self) -> StateNorm {
        StateNorm::from_plant(self.plant)
    }
}

/// What the policy sees in the forecast slots of its state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForecastMode {
    /// Quantile forecasts from the fitted models.
    Probabilistic,
    /// All zeros; the agent flies on current measurements only.
    Zeroed,
    /// The observed future replicated across the three quantile slots.
    Perfect,
}

pub fn forecast_block(episode: &Episode, t: usize, mode: ForecastMode) -> [f64; FORECAST_BLOCK] {
    match mode {
        ForecastMode::Probabilistic => episode.forecast_blocks[t],
        ForecastMode::Zeroed => [0.0; FORECAST_BLOCK],
        ForecastMode::Perfect => {
            let mut block = [0.0; FORECAST_BLOCK];
            for q in 0..3 {
                block[q * FORECAST_HORIZONS..(q + 1) * FORECAST_HORIZONS]
                    .copy_from_slice(&episode.future_m3h[t]);
            }
            block
        }
    }
}

fn initial_state(episode: &Episode, level: f64, mode: ForecastMode) -> EnvState {
    EnvState {
        level_m: level,
        intake_m3h: episode.intake_m3h[0],
        online: episode.online[0],
        setpoints_kw: [0.0; N_PUMPS],
        forecast: forecast_block(episode, 0, mode),
        forecast_present: mode != ForecastMode::Zeroed,
    }
}

fn exo_for(episode: &Episode, next_t: usize, mode: ForecastMode) -> StepExo {
    StepExo {
        next_intake_m3h: episode.intake_m3h[next_t],
        next_online: episode.online[next_t],
        next_forecast: forecast_block(episode, next_t, mode),
    }
}

/// Outcome of one training rollout segment.
pub struct TrainingSegment {
    pub transitions: Vec<Transition>,
    /// Value estimate of the state after the last transition.
    pub bootstrap_value: f64,
    pub ended_by_alarm: bool,
}

/// Stochastic rollout for training: Beta samples, randomized initial
/// level, terminating on an alarm crossing, the episode end, or the
/// step budget.
#[allow(clippy::too_many_arguments)]
pub fn rollout_training(
    policy: &PolicyNet,
    value: &ValueNet,
    env: &EmuEnv,
    episode: &Episode,
    initial_level: f64,
    mode: ForecastMode,
    max_steps: usize,
    rng: &mut ChaCha12Rng,
) -> TrainingSegment {
    let norm = env.norm();
    let mut state = initial_state(episode, initial_level, mode);
    let mut transitions = Vec::new();
    let mut ended_by_alarm = false;
    let steps = (episode.len() - 1).min(max_steps);

    for t in 0..steps {
        let features = state.features(&norm);
        let params = policy.forward(&features).expect("finite state");
        let x = PolicyNet::sample_action(&params, rng);
        let mask = state.online;
        let log_prob_old = PolicyNet::joint_log_prob(&params, &x, &mask);
        let action_kw = action_to_kw(&x, &mask, env.plant.rated_power_kw);
        let exo = exo_for(episode, t + 1, mode);
        let outcome = env_step(
            &state,
            &action_kw,
            &exo,
            env.outflow,
            env.level,
            &env.reward,
            env.plant,
        );
        let done = outcome.alarm_crossing;
        transitions.push(Transition {
            features,
            action_x: x,
            mask,
            log_prob_old,
            reward_scaled: outcome.reward.scaled,
            value: value.value(&features),
            done,
        });
        state = outcome.next;
        if done {
            ended_by_alarm = true;
            break;
        }
    }
    let bootstrap_value = value.value(&state.features(&norm));
    TrainingSegment {
        transitions,
        bootstrap_value,
        ended_by_alarm,
    }
}

/// Step-level trace of a deterministic evaluation.
#[derive(Debug, Clone)]
pub struct EvalTrace {
    pub episode_id: usize,
    /// Visited levels, starting with the initial level (len = steps + 1).
    pub levels_m: Vec<f64>,
    /// Total power applied per step [kW].
    pub total_power_kw: Vec<f64>,
    pub rewards_scaled: Vec<f64>,
    pub alarm_crossings: usize,
    /// Crossings in the first two steps (unavoidable starts).
    pub alarm_crossings_early: usize,
    /// Steps whose level exceeds the alarm threshold.
    pub alarm_step_occurrences: usize,
    pub floor_breaches: usize,
}

impl EvalTrace {
    pub fn energy_mwh(&self, step_hours: f64) -> f64 {
        super::report::energy_mwh(&self.total_power_kw, step_hours)
    }

    pub fn mean_reward(&self) -> f64 {
        if self.rewards_scaled.is_empty() {
            return 0.0;
        }
        self.rewards_scaled.iter().sum::<f64>() / self.rewards_scaled.len() as f64
    }
}

/// Action source for evaluation rollouts.
enum Actor<'p> {
    Policy(&'p PolicyNet, ForecastMode),
    Rules(&'p mut dyn Controller),
}

fn rollout_eval(env: &EmuEnv, episode: &Episode, mut actor: Actor) -> EvalTrace {
    let norm = env.norm();
    let mode = match &actor {
        Actor::Policy(_, mode) => *mode,
        Actor::Rules(_) => ForecastMode::Zeroed,
    };
    let mut state = initial_state(episode, episode.initial_level_m, mode);
    let mut trace = EvalTrace {
        episode_id: episode.id,
        levels_m: vec![state.level_m],
        total_power_kw: Vec::new(),
        rewards_scaled: Vec::new(),
        alarm_crossings: 0,
        alarm_crossings_early: 0,
        alarm_step_occurrences: 0,
        floor_breaches: 0,
    };
    if state.level_m > env.plant.alarm_level_m {
        // starting above the alarm counts as an (unavoidable) crossing
        trace.alarm_crossings += 1;
        trace.alarm_crossings_early += 1;
        trace.alarm_step_occurrences += 1;
    }

    for t in 0..episode.len() - 1 {
        let action_kw = match &mut actor {
            Actor::Policy(policy, _) => {
                let features = state.features(&norm);
                let params = policy.forward(&features).expect("finite state");
                let x = PolicyNet::mean_action(&params);
                action_to_kw(&x, &state.online, env.plant.rated_power_kw)
            }
            Actor::Rules(controller) => controller.set_points(state.level_m, &state.online),
        };
        let exo = exo_for(episode, t + 1, mode);
        let outcome = env_step(
            &state,
            &action_kw,
            &exo,
            env.outflow,
            env.level,
            &env.reward,
            env.plant,
        );
        if outcome.alarm_crossing {
            trace.alarm_crossings += 1;
            if t < 2 {
                trace.alarm_crossings_early += 1;
            }
        }
        if outcome.next.level_m > env.plant.alarm_level_m {
            trace.alarm_step_occurrences += 1;
        }
        if outcome.floor_breach {
            trace.floor_breaches += 1;
        }
        trace.levels_m.push(outcome.next.level_m);
        trace.total_power_kw.push(outcome.total_power_kw);
        trace.rewards_scaled.push(outcome.reward.scaled);
        state = outcome.next;
    }
    trace
}

/// Deterministic policy evaluation: mean actions, recorded initial level,
/// running to the episode end counting crossings.
pub fn rollout_policy_eval(
    policy: &PolicyNet,
    env: &EmuEnv,
    episode: &Episode,
    mode: ForecastMode,
) -> EvalTrace {
    rollout_eval(env, episode, Actor::Policy(policy, mode))
}

/// The fixed operating rules replayed through the same emulator on the
/// same episode inputs.
pub fn rollout_rules_eval(
    controller: &mut dyn Controller,
    env: &EmuEnv,
    episode: &Episode,
) -> EvalTrace {
    controller.reset();
    rollout_eval(env, episode, Actor::Rules(controller))
}

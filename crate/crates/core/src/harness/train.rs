//! The two-phase learning loop: stochastic rollouts and a policy update
//! per iteration, followed by a deterministic test pass whose statistics
//! land in the training log.

use super::episode::{randomize_initial_level, Episode};
use super::rollout::{
    rollout_policy_eval, rollout_training, EmuEnv, EvalTrace, ForecastMode,
};
use super::HarnessError;
use crate::agent::{ppo_update, Checkpoint, PolicyNet, PpoConfig, PpoOptimizer, ValueNet};
use crate::seeds::rng_for;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Harness-level knobs. The defaults are the desk-scale configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    /// Minimum contiguous steps per episode.
    pub min_episode_len: usize,
    /// Test episodes evaluated every iteration.
    pub eval_episodes: usize,
    /// Step cap of the per-iteration test pass (keeps iterations cheap;
    /// full episodes are always used by the final scenario evaluation).
    pub eval_max_steps: usize,
    pub checkpoint_every: usize,
    /// Share of final iterations summarized by the trailing quantiles.
    pub trailing_fraction: f64,
    /// Worker threads for independent fits; results do not depend on it.
    pub workers: usize,
    /// Days of synthetic history at desk scale.
    pub synth_days: u32,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            min_episode_len: 200,
            eval_episodes: 1,
            eval_max_steps: 400,
            checkpoint_every: 250,
            trailing_fraction: 0.2,
            workers: 3,
            synth_days: 30,
        }
    }
}

/// One row of the training log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainLogRow {
    pub iteration: usize,
    pub mean_reward: f64,
    pub alarms: usize,
    pub energy_mwh: f64,
    pub train_alarms: usize,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub mean_ratio: f64,
    pub learning_rate: f64,
}

/// Everything a finished training run produces.
pub struct TrainOutput {
    pub policy: PolicyNet,
    pub value: ValueNet,
    pub checkpoints: Vec<Checkpoint>,
    pub log: Vec<TrainLogRow>,
    pub mode: ForecastMode,
}

impl TrainOutput {
    pub fn final_checkpoint(&self) -> &Checkpoint {
        self.checkpoints.last().expect("final checkpoint present")
    }
}

pub fn train_log_csv(log: &[TrainLogRow]) -> String {
    let mut out = String::from(
        "iteration,mean_reward,alarms,energy_mwh,train_alarms,policy_loss,value_loss,mean_ratio,learning_rate\n",
    );
    for row in log {
        out.push_str(&format!(
            "{},{:.9},{},{:.9},{},{:.9},{:.9},{:.6},{:.9e}\n",
            row.iteration,
            row.mean_reward,
            row.alarms,
            row.energy_mwh,
            row.train_alarms,
            row.policy_loss,
            row.value_loss,
            row.mean_ratio,
            row.learning_rate,
        ));
    }
    out
}

/// Trains a fresh agent.
///
/// Per iteration: episodes are sampled uniformly at random, their initial
/// level randomized, and stochastic rollouts collected until the step
/// budget is filled (episodes terminate early on an alarm crossing);
/// advantages are computed per rollout segment; one clipped-surrogate
/// update runs over the batch; then the current policy is scored
/// deterministically on a fixed test subset.
pub fn train(
    env: &EmuEnv,
    train_episodes: &[Episode],
    test_episodes: &[Episode],
    mode: ForecastMode,
    ppo: &PpoConfig,
    harness: &HarnessConfig,
    seed: u64,
    label: &str,
) -> Result<TrainOutput, HarnessError> {
    ppo.validate()?;
    if train_episodes.is_empty() || test_episodes.is_empty() {
        return Err(HarnessError::Other(
            "training needs nonempty train and test episode sets".into(),
        ));
    }
    let mut init_rng = rng_for(seed, &format!("{label}/init"));
    let mut policy = PolicyNet::new(&mut init_rng);
    let mut value = ValueNet::new(&mut init_rng);
    let mut optimizer = PpoOptimizer::new(&policy, &value);
    let mut rollout_rng = rng_for(seed, &format!("{label}/rollout"));
    let mut update_rng = rng_for(seed, &format!("{label}/update"));

    let eval_set: Vec<&Episode> = test_episodes
        .iter()
        .take(harness.eval_episodes.max(1))
        .collect();

    let masked = mode == ForecastMode::Zeroed;
    let mut checkpoints: Vec<Checkpoint> = Vec::new();
    let mut log: Vec<TrainLogRow> = Vec::new();

    for iteration in 0..ppo.iterations {
        // ---- training phase: collect the transition budget
        let mut transitions = Vec::with_capacity(ppo.timesteps_per_update);
        let mut advantages = Vec::with_capacity(ppo.timesteps_per_update);
        let mut train_alarms = 0usize;
        while transitions.len() < ppo.timesteps_per_update {
            let episode = &train_episodes[rollout_rng.gen_range(0..train_episodes.len())];
            let initial = randomize_initial_level(&mut rollout_rng);
            let budget = ppo.timesteps_per_update - transitions.len();
            let segment = rollout_training(
                &policy,
                &value,
                env,
                episode,
                initial,
                mode,
                budget,
                &mut rollout_rng,
            );
            if segment.ended_by_alarm {
                train_alarms += 1;
            }
            let seg_adv = crate::agent::gae_truncated(
                &segment
                    .transitions
                    .iter()
                    .map(|t| t.reward_scaled)
                    .collect::<Vec<_>>(),
                &segment
                    .transitions
                    .iter()
                    .map(|t| t.value)
                    .collect::<Vec<_>>(),
                &segment
                    .transitions
                    .iter()
                    .map(|t| t.done)
                    .collect::<Vec<_>>(),
                segment.bootstrap_value,
                ppo.gamma,
                ppo.lambda,
                ppo.gae_window,
            );
            advantages.extend(seg_adv);
            transitions.extend(segment.transitions);
        }

        let stats = ppo_update(
            &mut policy,
            &mut value,
            &mut optimizer,
            &transitions,
            &advantages,
            iteration,
            ppo,
            &mut update_rng,
        )?;

        // ---- test phase: deterministic scoring on the fixed subset
        let mut reward_sum = 0.0;
        let mut reward_n = 0usize;
        let mut alarms = 0usize;
        let mut energy = 0.0;
        for episode in &eval_set {
            let trace = eval_capped(&policy, env, episode, mode, harness.eval_max_steps);
            reward_sum += trace.rewards_scaled.iter().sum::<f64>();
            reward_n += trace.rewards_scaled.len();
            alarms += trace.alarm_crossings;
            energy += trace.energy_mwh(env.plant.step_hours());
        }
        let mean_reward = reward_sum / reward_n.max(1) as f64;
        if !mean_reward.is_finite() {
            let _ = checkpoints.last().ok_or(HarnessError::Diverged { iteration })?;
            return Err(HarnessError::Diverged { iteration });
        }
        log.push(TrainLogRow {
            iteration,
            mean_reward,
            alarms,
            energy_mwh: energy,
            train_alarms,
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            mean_ratio: stats.mean_ratio,
            learning_rate: ppo.lr_at(iteration),
        });

        if harness.checkpoint_every > 0 && (iteration + 1) % harness.checkpoint_every == 0 {
            checkpoints.push(Checkpoint::capture(&policy, &value, iteration + 1, masked));
        }
    }
    // final weights always captured
    if checkpoints
        .last()
        .map(|c| c.iteration != ppo.iterations)
        .unwrap_or(true)
    {
        checkpoints.push(Checkpoint::capture(&policy, &value, ppo.iterations, masked));
    }

    Ok(TrainOutput {
        policy,
        value,
        checkpoints,
        log,
        mode,
    })
}

/// Deterministic evaluation truncated to a step cap (log path only).
fn eval_capped(
    policy: &PolicyNet,
    env: &EmuEnv,
    episode: &Episode,
    mode: ForecastMode,
    max_steps: usize,
) -> EvalTrace {
    if episode.len() <= max_steps + 1 {
        return rollout_policy_eval(policy, env, episode, mode);
    }
    let truncated = Episode {
        id: episode.id,
        start_index: episode.start_index,
        start_time: episode.start_time,
        intake_m3h: episode.intake_m3h[..max_steps + 1].to_vec(),
        online: episode.online[..max_steps + 1].to_vec(),
        ref_level_m: episode.ref_level_m[..max_steps + 1].to_vec(),
        forecast_blocks: episode.forecast_blocks[..max_steps + 1].to_vec(),
        future_m3h: episode.future_m3h[..max_steps + 1].to_vec(),
        initial_level_m: episode.initial_level_m,
    };
    rollout_policy_eval(policy, env, &truncated, mode)
}

/// Trailing-window quantiles of the log statistics.
pub fn trailing_quantiles(
    log: &[TrainLogRow],
    fraction: f64,
) -> Option<super::report::TrailingQuantiles> {
    if log.is_empty() {
        return None;
    }
    let window = ((log.len() as f64 * fraction).ceil() as usize).clamp(1, log.len());
    let tail = &log[log.len() - window..];
    let q = |values: &mut Vec<f64>, alpha: f64| -> f64 {
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite stat"));
        let pos = alpha * (values.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let w = pos - lo as f64;
        values[lo] * (1.0 - w) + values[hi] * w
    };
    let mut rewards: Vec<f64> = tail.iter().map(|r| r.mean_reward).collect();
    let mut alarms: Vec<f64> = tail.iter().map(|r| r.alarms as f64).collect();
    let mut energy: Vec<f64> = tail.iter().map(|r| r.energy_mwh).collect();
    Some(super::report::TrailingQuantiles {
        iterations: window,
        reward_q25: q(&mut rewards, 0.25),
        reward_q50: q(&mut rewards, 0.50),
        reward_q75: q(&mut rewards, 0.75),
        alarms_q25: q(&mut alarms, 0.25),
        alarms_q50: q(&mut alarms, 0.50),
        alarms_q75: q(&mut alarms, 0.75),
        energy_q25: q(&mut energy, 0.25),
        energy_q50: q(&mut energy, 0.50),
        energy_q75: q(&mut energy, 0.75),
    })
}

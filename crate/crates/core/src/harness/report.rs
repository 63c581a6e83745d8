//! Scenario reports and their CSV renderings.

use super::rollout::EvalTrace;
use super::scenario::ScenarioKind;
use serde::{Deserialize, Serialize};

/// Canonical energy accounting: kW per step times the step length.
pub fn energy_mwh(total_power_kw: &[f64], step_hours: f64) -> f64 {
    total_power_kw.iter().sum::<f64>() * step_hours / 1000.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeBreakdown {
    pub episode_id: usize,
    pub steps: usize,
    pub alarm_crossings: usize,
    pub alarm_step_occurrences: usize,
    pub energy_mwh: f64,
    pub level_mean_m: f64,
}

/// Trailing-window quantiles of the per-iteration test statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrailingQuantiles {
    pub iterations: usize,
    pub reward_q25: f64,
    pub reward_q50: f64,
    pub reward_q75: f64,
    pub alarms_q25: f64,
    pub alarms_q50: f64,
    pub alarms_q75: f64,
    pub energy_q25: f64,
    pub energy_q50: f64,
    pub energy_q75: f64,
}

/// Evaluation result of one scenario over the held-out episodes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: ScenarioKind,
    pub n_episodes: usize,
    pub steps: usize,
    /// Upward crossings of the alarm level.
    pub alarm_crossings: usize,
    /// Crossings in the first two steps of an episode.
    pub alarm_crossings_unavoidable: usize,
    /// Steps spent above the alarm level.
    pub alarm_step_occurrences: usize,
    pub floor_breaches: usize,
    pub energy_mwh: f64,
    pub level_mean_m: f64,
    pub level_std_m: f64,
    pub mean_reward: f64,
    pub per_episode: Vec<EpisodeBreakdown>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trailing: Option<TrailingQuantiles>,
}

impl ScenarioReport {
    /// Aggregates evaluation traces into a report.
    pub fn from_traces(scenario: ScenarioKind, traces: &[EvalTrace], step_hours: f64) -> Self {
        let mut per_episode = Vec::with_capacity(traces.len());
        let mut crossings = 0;
        let mut early = 0;
        let mut occurrences = 0;
        let mut floor = 0;
        let mut energy = 0.0;
        let mut level_sum = 0.0;
        let mut level_sq = 0.0;
        let mut level_n = 0usize;
        let mut steps = 0usize;
        let mut reward_sum = 0.0;
        let mut reward_n = 0usize;
        for trace in traces {
            let ep_energy = trace.energy_mwh(step_hours);
            let ep_mean =
                trace.levels_m.iter().sum::<f64>() / trace.levels_m.len().max(1) as f64;
            per_episode.push(EpisodeBreakdown {
                episode_id: trace.episode_id,
                steps: trace.total_power_kw.len(),
                alarm_crossings: trace.alarm_crossings,
                alarm_step_occurrences: trace.alarm_step_occurrences,
                energy_mwh: ep_energy,
                level_mean_m: ep_mean,
            });
            crossings += trace.alarm_crossings;
            early += trace.alarm_crossings_early;
            occurrences += trace.alarm_step_occurrences;
            floor += trace.floor_breaches;
            energy += ep_energy;
            steps += trace.total_power_kw.len();
            for l in &trace.levels_m {
                level_sum += l;
                level_sq += l * l;
                level_n += 1;
            }
            reward_sum += trace.rewards_scaled.iter().sum::<f64>();
            reward_n += trace.rewards_scaled.len();
        }
        let mean = level_sum / level_n.max(1) as f64;
        let var = (level_sq / level_n.max(1) as f64 - mean * mean).max(0.0);
        Self {
            scenario,
            n_episodes: traces.len(),
            steps,
            alarm_crossings: crossings,
            alarm_crossings_unavoidable: early,
            alarm_step_occurrences: occurrences,
            floor_breaches: floor,
            energy_mwh: energy,
            level_mean_m: mean,
            level_std_m: var.sqrt(),
            mean_reward: reward_sum / reward_n.max(1) as f64,
            per_episode,
            trailing: None,
        }
    }
}

/// Improvement of `value` over `baseline` as a fraction of the baseline.
pub fn improvement(baseline: f64, value: f64) -> f64 {
    if baseline == 0.0 {
        return 0.0;
    }
    (baseline - value) / baseline
}

/// Summary table mirroring the evaluation tables: one row per scenario
/// with energy, alarms and level statistics plus improvements over the
/// first (baseline) row.
pub fn scenario_summary_csv(reports: &[ScenarioReport]) -> String {
    let mut out = String::from(
        "scenario,episodes,steps,energy_mwh,alarm_crossings,alarm_crossings_unavoidable,\
         alarm_step_occurrences,level_mean_m,level_std_m,improvement_energy_pct,\
         improvement_alarms_pct\n",
    );
    let baseline = reports.first();
    for r in reports {
        let (imp_energy, imp_alarms) = match baseline {
            Some(b) if b.scenario != r.scenario => (
                improvement(b.energy_mwh, r.energy_mwh) * 100.0,
                improvement(
                    b.alarm_step_occurrences as f64,
                    r.alarm_crossings as f64,
                ) * 100.0,
            ),
            _ => (0.0, 0.0),
        };
        out.push_str(&format!(
            "{},{},{},{:.6},{},{},{},{:.4},{:.4},{:.2},{:.2}\n",
            r.scenario.as_str(),
            r.n_episodes,
            r.steps,
            r.energy_mwh,
            r.alarm_crossings,
            r.alarm_crossings_unavoidable,
            r.alarm_step_occurrences,
            r.level_mean_m,
            r.level_std_m,
            imp_energy,
            imp_alarms,
        ));
    }
    out
}

/// Plot-ready per-step trace: step index, level, power, cumulative energy.
pub fn trace_csv(trace: &EvalTrace, step_hours: f64) -> String {
    let mut out = String::from("step,level_m,total_power_kw,cumulative_energy_mwh\n");
    let mut cumulative = 0.0;
    out.push_str(&format!("0,{},,\n", trace.levels_m[0]));
    for (i, (power, level)) in trace
        .total_power_kw
        .iter()
        .zip(trace.levels_m.iter().skip(1))
        .enumerate()
    {
        cumulative += power * step_hours / 1000.0;
        out.push_str(&format!("{},{level},{power:.6},{cumulative:.9}\n", i + 1));
    }
    out
}

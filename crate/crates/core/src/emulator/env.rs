//! One-step transition of the emulated environment.

use super::level::LevelModel;
use super::outflow::OutflowModel;
use super::reward::{reward, RewardConfig, RewardParts};
use crate::plant::{PlantConfig, N_PUMPS};

/// Forecast block carried in the state: three quantile levels over the
/// full horizon.
pub const FORECAST_QUANTILES: usize = 3;
pub const FORECAST_HORIZONS: usize = 20;
pub const FORECAST_BLOCK: usize = FORECAST_QUANTILES * FORECAST_HORIZONS;

/// Flattened state dimension: level + availability + intake + set-points +
/// forecast block.
pub const STATE_DIM: usize = 1 + N_PUMPS + 1 + N_PUMPS + FORECAST_BLOCK;

/// The controllable-system snapshot the policy observes.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub level_m: f64,
    pub intake_m3h: f64,
    pub online: [bool; N_PUMPS],
    /// Set-points applied on the previous step [kW].
    pub setpoints_kw: [f64; N_PUMPS],
    /// Quantile-major forecast block: `[q25 over 20 steps, q50 …, q75 …]`
    /// [m³/h].
    pub forecast: [f64; FORECAST_BLOCK],
    /// False when the policy runs without forecast information; the block
    /// slots are then fed as exact zeros, which is the centered-neutral
    /// input value.
    pub forecast_present: bool,
}

/// Normalization constants mapping a state onto network inputs. Features
/// are centered on the operating point so the hidden layers see
/// zero-mean, order-one inputs.
#[derive(Debug, Clone, Copy)]
pub struct StateNorm {
    pub level_anchor_m: f64,
    pub level_scale_m: f64,
    pub intake_mid_m3h: f64,
    pub intake_halfspan_m3h: f64,
    pub rated_power_kw: f64,
}

impl StateNorm {
    pub fn from_plant(cfg: &PlantConfig) -> Self {
        Self {
            level_anchor_m: cfg.setpoint_m,
            level_scale_m: 2.0,
            intake_mid_m3h: 0.5 * (cfg.intake_min_m3h + cfg.intake_max_m3h),
            intake_halfspan_m3h: 0.5 * (cfg.intake_max_m3h - cfg.intake_min_m3h),
            rated_power_kw: cfg.rated_power_kw,
        }
    }

    #[inline]
    fn flow(&self, value_m3h: f64) -> f64 {
        (value_m3h - self.intake_mid_m3h) / self.intake_halfspan_m3h
    }
}

impl EnvState {
    /// Flattens to the normalized network input.
    pub fn features(&self, norm: &StateNorm) -> [f64; STATE_DIM] {
        let mut out = [0.0; STATE_DIM];
        out[0] = (self.level_m - norm.level_anchor_m) / norm.level_scale_m;
        for i in 0..N_PUMPS {
            out[1 + i] = if self.online[i] { 1.0 } else { -1.0 };
        }
        out[1 + N_PUMPS] = norm.flow(self.intake_m3h);
        for i in 0..N_PUMPS {
            out[2 + N_PUMPS + i] =
                (self.setpoints_kw[i] - 0.5 * norm.rated_power_kw) / (0.5 * norm.rated_power_kw);
        }
        if self.forecast_present {
            for (i, f) in self.forecast.iter().enumerate() {
                out[2 + 2 * N_PUMPS + i] = norm.flow(*f);
            }
        }
        out
    }
}

/// Exogenous inputs for the next step, read from the episode.
#[derive(Debug, Clone)]
pub struct StepExo {
    pub next_intake_m3h: f64,
    pub next_online: [bool; N_PUMPS],
    pub next_forecast: [f64; FORECAST_BLOCK],
}

/// Result of applying an action.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next: EnvState,
    /// Per-pump power actually applied after masking and clamping [kW].
    pub applied_kw: [f64; N_PUMPS],
    pub total_power_kw: f64,
    pub outflow_m3h: f64,
    pub reward: RewardParts,
    /// Upward crossing of the alarm level on this step.
    pub alarm_crossing: bool,
    /// Next level below the pump-safety floor.
    pub floor_breach: bool,
}

/// Applies per-pump set-points to the emulated station.
///
/// Offline pumps are masked to zero; outflow comes from the monotone
/// projection model at the current level; the next level comes from the
/// linear transition model rescaled to the episode step, clipped to the
/// physical tank range. A pure function of its inputs.
#[allow(clippy::too_many_arguments)]
pub fn env_step(
    state: &EnvState,
    action_kw: &[f64; N_PUMPS],
    exo: &StepExo,
    outflow_model: &OutflowModel,
    level_model: &LevelModel,
    reward_cfg: &RewardConfig,
    cfg: &PlantConfig,
) -> StepOutcome {
    let mut applied = [0.0; N_PUMPS];
    for i in 0..N_PUMPS {
        applied[i] = if state.online[i] {
            action_kw[i].clamp(0.0, cfg.rated_power_kw)
        } else {
            0.0
        };
    }
    let total: f64 = applied.iter().sum();
    let outflow = outflow_model
        .predict(total, state.level_m)
        .max(0.0);
    let next_level = level_model
        .next_at(state.level_m, state.intake_m3h, outflow, cfg.step_minutes)
        .clamp(0.0, cfg.tank_max_m);

    let alarm_crossing = state.level_m <= cfg.alarm_level_m && next_level > cfg.alarm_level_m;
    let floor_breach = next_level < cfg.safety_floor_m;
    let parts = reward(next_level, total, cfg.installed_kw(), reward_cfg);

    StepOutcome {
        next: EnvState {
            level_m: next_level,
            intake_m3h: exo.next_intake_m3h,
            online: exo.next_online,
            setpoints_kw: applied,
            forecast: exo.next_forecast,
            forecast_present: state.forecast_present,
        },
        applied_kw: applied,
        total_power_kw: total,
        outflow_m3h: outflow,
        reward: parts,
        alarm_crossing,
        floor_breach,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emulator::level::fit_level;
    use crate::emulator::outflow::fit_outflow;
    use crate::forecast::GbtParams;
    use crate::plant::{ground_truth_outflow, PlantConfig, RawRecord};
    use chrono::{Duration, NaiveDateTime};

    fn fitted_models(cfg: &PlantConfig) -> (OutflowModel, LevelModel) {
        let start =
            NaiveDateTime::parse_from_str("2016-01-01T00:00:00", "%Y-%m-%dT%H:%M:%S").unwrap();
        let coeff = cfg.pump_curve_coeff();
        let mut level = 6.0f64;
        let records: Vec<RawRecord> = (0..2500)
            .map(|i| {
                let intake = 6000.0 + 4000.0 * ((i as f64 * 0.05).sin());
                // mean-reverting power choice keeps the level in range
                // without clamping, so transitions stay exactly linear
                let correction = (level - 6.0) * cfg.tank_area_m2 * (60.0 / 4.0) * 0.4;
                let wiggle = 1.0 + 0.3 * ((i as f64 * 0.173).sin());
                let wanted_q = ((intake + correction) * wiggle).max(0.0);
                let head = cfg.lift_height_m - level;
                let total = (wanted_q * head / coeff)
                    .powf(1.0 / cfg.pump_exponent)
                    .clamp(0.0, cfg.installed_kw());
                let outflow = ground_truth_outflow(total, level, cfg).unwrap();
                let mut powers = [0.0; N_PUMPS];
                let count = ((total / cfg.rated_power_kw).ceil() as usize).clamp(1, N_PUMPS);
                for p in powers.iter_mut().take(count) {
                    *p = total / count as f64;
                }
                let r = RawRecord {
                    timestamp: start + Duration::minutes(4 * i as i64),
                    intake_m3h: intake,
                    outflow_m3h: outflow,
                    level_m: level,
                    pump_power_kw: powers,
                    pump_freq_hz: [0.0; N_PUMPS],
                    pump_online: [true; N_PUMPS],
                };
                level += (intake - outflow) * (4.0 / 60.0) / cfg.tank_area_m2;
                r
            })
            .collect();
        let (outflow_model, _) = fit_outflow(&records, &GbtParams::default(), cfg).unwrap();
        let (level_model, _) = fit_level(&records, 4).unwrap();
        (outflow_model, level_model)
    }

    fn state(cfg: &PlantConfig, level: f64, intake: f64) -> EnvState {
        let _ = cfg;
        EnvState {
            level_m: level,
            intake_m3h: intake,
            online: [true; N_PUMPS],
            setpoints_kw: [0.0; N_PUMPS],
            forecast: [0.0; FORECAST_BLOCK],
            forecast_present: true,
        }
    }

    fn exo(intake: f64) -> StepExo {
        StepExo {
            next_intake_m3h: intake,
            next_online: [true; N_PUMPS],
            next_forecast: [0.0; FORECAST_BLOCK],
        }
    }

    #[test]
    fn max_action_on_low_intake_drains() {
        let cfg = PlantConfig::default();
        let (om, lm) = fitted_models(&cfg);
        let s = state(&cfg, 6.0, 2000.0);
        let out = env_step(
            &s,
            &[cfg.rated_power_kw; N_PUMPS],
            &exo(2000.0),
            &om,
            &lm,
            &RewardConfig::default(),
            &cfg,
        );
        assert!(out.next.level_m < s.level_m);
    }

    #[test]
    fn zero_action_on_positive_intake_fills() {
        let cfg = PlantConfig::default();
        let (om, lm) = fitted_models(&cfg);
        let s = state(&cfg, 6.0, 8000.0);
        let out = env_step(
            &s,
            &[0.0; N_PUMPS],
            &exo(8000.0),
            &om,
            &lm,
            &RewardConfig::default(),
            &cfg,
        );
        assert!(out.next.level_m > s.level_m);
    }

    #[test]
    fn alarm_crossing_fires_exactly_once() {
        let cfg = PlantConfig::default();
        let (om, lm) = fitted_models(&cfg);
        // strong inflow, no pumping: level climbs through the alarm
        let mut s = state(&cfg, 7.15, 14000.0);
        let mut crossings = 0;
        for _ in 0..20 {
            let out = env_step(
                &s,
                &[0.0; N_PUMPS],
                &exo(14000.0),
                &om,
                &lm,
                &RewardConfig::default(),
                &cfg,
            );
            if out.alarm_crossing {
                crossings += 1;
            }
            s = out.next;
        }
        assert!(s.level_m > cfg.alarm_level_m);
        assert_eq!(crossings, 1);
    }

    #[test]
    fn offline_pumps_are_masked_from_action_and_reward() {
        let cfg = PlantConfig::default();
        let (om, lm) = fitted_models(&cfg);
        let mut s = state(&cfg, 6.0, 5000.0);
        s.online = [false; N_PUMPS];
        let out = env_step(
            &s,
            &[cfg.rated_power_kw; N_PUMPS],
            &exo(5000.0),
            &om,
            &lm,
            &RewardConfig::default(),
            &cfg,
        );
        assert_eq!(out.total_power_kw, 0.0);
        assert_eq!(out.reward.power_term, 0.0);
        assert!(out.applied_kw.iter().all(|p| *p == 0.0));
    }

    #[test]
    fn replay_is_deterministic() {
        let cfg = PlantConfig::default();
        let (om, lm) = fitted_models(&cfg);
        let s = state(&cfg, 6.3, 6000.0);
        let action = [40.0, 80.0, 0.0, 25.0, 110.0];
        let a = env_step(&s, &action, &exo(6100.0), &om, &lm, &RewardConfig::default(), &cfg);
        let b = env_step(&s, &action, &exo(6100.0), &om, &lm, &RewardConfig::default(), &cfg);
        assert_eq!(a.next, b.next);
        assert_eq!(a.reward, b.reward);
    }

    #[test]
    fn state_features_are_centered_and_ordered() {
        let cfg = PlantConfig::default();
        let norm = StateNorm::from_plant(&cfg);
        let mut s = state(&cfg, 4.0, 8100.0);
        s.setpoints_kw = [55.0; N_PUMPS];
        s.forecast[0] = 14400.0;
        s.online[1] = false;
        let f = s.features(&norm);
        assert_eq!(f[0], -1.0); // (4 - 6) / 2
        assert_eq!(f[1], 1.0);
        assert_eq!(f[2], -1.0);
        assert_eq!(f[1 + N_PUMPS], 0.0); // intake at mid-range
        assert_eq!(f[2 + N_PUMPS], 0.0); // set-point at half rated
        assert_eq!(f[2 + 2 * N_PUMPS], 1.0); // forecast at max intake
        assert_eq!(f.len(), STATE_DIM);

        // masked forecasts read as exact zeros
        s.forecast_present = false;
        let masked = s.features(&norm);
        assert!(masked[2 + 2 * N_PUMPS..].iter().all(|v| *v == 0.0));
    }
}

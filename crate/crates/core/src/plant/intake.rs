//! Synthetic intake generation: daily profile, monthly wet/dry scaling,
//! Poisson storm pulses and bounded AR(1) noise on a uniform grid.

use super::config::PlantConfig;
use super::types::{quantize, IntakeSeries};
use super::PlantError;
use crate::seeds::rng_for;
use chrono::{Datelike, Duration, Timelike};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use std::f64::consts::TAU;

/// Relative daily profile at a fraction-of-day `tau` in [0, 1).
fn daily_profile(cfg: &PlantConfig, tau: f64) -> f64 {
    1.0 + cfg.daily_amp1 * (TAU * (tau - cfg.daily_phase1)).sin()
        + cfg.daily_amp2 * (2.0 * TAU * (tau - cfg.daily_phase2)).sin()
}

struct Storm {
    start_step: usize,
    peak_m3h: f64,
    ramp_steps: usize,
    decay_steps: f64,
}

impl Storm {
    fn contribution(&self, step: usize) -> f64 {
        if step < self.start_step {
            return 0.0;
        }
        let k = step - self.start_step;
        if k < self.ramp_steps {
            // smoothstep onset
            let x = (k + 1) as f64 / self.ramp_steps as f64;
            self.peak_m3h * x * x * (3.0 - 2.0 * x)
        } else {
            let d = (k - self.ramp_steps) as f64;
            self.peak_m3h * (-d / self.decay_steps).exp()
        }
    }
}

/// Generates `days` of intake on the uniform step grid of `cfg`.
///
/// Values are clipped to `[intake_min, intake_max]` and quantized, so a
/// fixed seed regenerates the series bitwise.
pub fn generate_intake(cfg: &PlantConfig, days: u32) -> Result<IntakeSeries, PlantError> {
    cfg.validate()?;
    if days < 1 {
        return Err(PlantError::Config("days must be at least 1".to_string()));
    }
    let start = cfg.start_time()?;
    let steps = cfg.steps_per_day() * days as usize;

    let mut storm_rng = rng_for(cfg.seed, "intake-storms");
    let mut storms = Vec::new();
    if cfg.storm_rate_per_day > 0.0 {
        let lambda = cfg.storm_rate_per_day * days as f64;
        let n_storms = Poisson::new(lambda)
            .map_err(|e| PlantError::Config(format!("bad storm rate: {e}")))?
            .sample(&mut storm_rng) as usize;
        for _ in 0..n_storms {
            storms.push(Storm {
                start_step: storm_rng.gen_range(0..steps),
                peak_m3h: storm_rng.gen_range(cfg.storm_peak_m3h.0..=cfg.storm_peak_m3h.1),
                ramp_steps: storm_rng.gen_range(cfg.storm_ramp_steps.0..=cfg.storm_ramp_steps.1)
                    as usize,
                decay_steps: storm_rng
                    .gen_range(cfg.storm_decay_steps.0..=cfg.storm_decay_steps.1)
                    as f64,
            });
        }
        storms.sort_by_key(|s| s.start_step);
    }

    let mut noise_rng = rng_for(cfg.seed, "intake-noise");
    let mut noise = 0.0f64;

    let mut timestamps = Vec::with_capacity(steps);
    let mut values = Vec::with_capacity(steps);
    for i in 0..steps {
        let ts = start + Duration::minutes(cfg.step_minutes * i as i64);
        let tau = (ts.hour() as f64 * 60.0 + ts.minute() as f64) / (24.0 * 60.0);
        let month_factor = cfg.month_factors[ts.month0() as usize];
        let base = cfg.base_flow_m3h * month_factor * daily_profile(cfg, tau);

        let storm_total: f64 = storms.iter().map(|s| s.contribution(i)).sum();

        if cfg.noise_scale_m3h > 0.0 {
            let innovation: f64 = noise_rng.gen_range(-1.0..1.0) * cfg.noise_scale_m3h;
            noise = (cfg.noise_ar * noise + innovation)
                .clamp(-cfg.noise_clamp_m3h, cfg.noise_clamp_m3h);
        }

        let value = (base + storm_total + noise).clamp(cfg.intake_min_m3h, cfg.intake_max_m3h);
        timestamps.push(ts);
        values.push(quantize(value));
    }

    IntakeSeries::new(timestamps, values)
}

//! Plant configuration.

use super::PlantError;
use serde::{Deserialize, Serialize};

/// Number of pump units in the station. The record schema, the baseline
/// sequencing rules and the agent action space are all five wide.
pub const N_PUMPS: usize = 5;

/// Static description of the synthetic pumping station.
///
/// The tank geometry and pump-curve constants are stand-ins chosen so that
/// three pumps at rated power roughly balance the maximum intake at the
/// 6 m set-point, which keeps the fixed-rules controller's alarm rate
/// nonzero and the optimization problem nondegenerate.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantConfig {
    /// Pump count; the workbench supports exactly five.
    pub n_pumps: usize,
    /// Rated active power per pump unit [kW].
    pub rated_power_kw: f64,
    /// Tank cross-section [m²].
    pub tank_area_m2: f64,
    /// Tank height; overflow occurs here [m].
    pub tank_max_m: f64,
    /// First alarm level: preventive bypass trigger [m].
    pub alarm_level_m: f64,
    /// Bottom limit for pump safety [m].
    pub safety_floor_m: f64,
    /// Level set-point of the current operating rules [m].
    pub setpoint_m: f64,
    /// Minimum plausible intake rate [m³/h].
    pub intake_min_m3h: f64,
    /// Maximum plausible intake rate [m³/h].
    pub intake_max_m3h: f64,
    /// Discretization step [minutes].
    pub step_minutes: i64,
    /// Master seed for all synthetic randomness.
    pub seed: u64,
    /// Simulation start timestamp (ISO-8601, no timezone).
    pub start: String,

    // Ground-truth pump curve: outflow = coeff · P_total^exponent / (lift − level).
    /// Static lift from the tank bottom to the discharge channel [m].
    pub lift_height_m: f64,
    /// Pump-curve exponent; < 1 makes outflow concave in power.
    pub pump_exponent: f64,
    /// Pump-curve coefficient; 0 = derive from the balance condition.
    pub pump_coeff: f64,

    // Intake shape.
    /// Dry-weather mean intake before monthly scaling [m³/h].
    pub base_flow_m3h: f64,
    /// Relative amplitude of the 24 h harmonic.
    pub daily_amp1: f64,
    /// Relative amplitude of the 12 h harmonic.
    pub daily_amp2: f64,
    /// Phase of the 24 h harmonic [fraction of a day].
    pub daily_phase1: f64,
    /// Phase of the 12 h harmonic [fraction of a day].
    pub daily_phase2: f64,
    /// Wet/dry multiplier per month (January first).
    pub month_factors: [f64; 12],
    /// Innovation scale of the AR(1) noise [m³/h].
    pub noise_scale_m3h: f64,
    /// AR(1) coefficient of the noise process.
    pub noise_ar: f64,
    /// Hard bound on the noise magnitude [m³/h].
    pub noise_clamp_m3h: f64,
    /// Mean storm arrivals per day.
    pub storm_rate_per_day: f64,
    /// Storm peak amplitude range [m³/h].
    pub storm_peak_m3h: (f64, f64),
    /// Storm onset ramp range [steps].
    pub storm_ramp_steps: (u32, u32),
    /// Storm exponential decay constant range [steps].
    pub storm_decay_steps: (u32, u32),

    // Pump availability.
    /// Per-pump daily probability of a maintenance window.
    pub maintenance_rate_per_day: f64,
    /// Maintenance window duration range [hours].
    pub maintenance_hours: (f64, f64),

    // Baseline controller tuning.
    /// Minimum operating frequency of the drives [Hz].
    pub baseline_min_freq_hz: f64,
    /// Frequency slew limit per step [Hz].
    pub baseline_slew_hz: f64,
    /// Level error that commands full frequency [m].
    pub baseline_band_m: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            n_pumps: N_PUMPS,
            rated_power_kw: 110.0,
            tank_area_m2: 1500.0,
            tank_max_m: 8.0,
            alarm_level_m: 7.2,
            safety_floor_m: 2.5,
            setpoint_m: 6.0,
            intake_min_m3h: 1800.0,
            intake_max_m3h: 14400.0,
            step_minutes: 2,
            seed: 42,
            start: "2016-01-01T00:00:00".to_string(),
            lift_height_m: 20.0,
            pump_exponent: 0.85,
            pump_coeff: 0.0,
            base_flow_m3h: 5200.0,
            daily_amp1: 0.22,
            daily_amp2: 0.10,
            daily_phase1: 0.30,
            daily_phase2: 0.05,
            month_factors: [
                1.25, 1.30, 1.15, 1.00, 0.90, 0.80, 0.75, 0.75, 0.85, 1.00, 1.10, 1.20,
            ],
            noise_scale_m3h: 180.0,
            noise_ar: 0.92,
            noise_clamp_m3h: 600.0,
            storm_rate_per_day: 0.4,
            storm_peak_m3h: (3500.0, 8500.0),
            storm_ramp_steps: (8, 25),
            storm_decay_steps: (30, 90),
            maintenance_rate_per_day: 0.02,
            maintenance_hours: (4.0, 12.0),
            baseline_min_freq_hz: 25.0,
            baseline_slew_hz: 4.0,
            baseline_band_m: 0.35,
        }
    }
}

impl PlantConfig {
    /// Checks the structural invariants of the configuration.
    pub fn validate(&self) -> Result<(), PlantError> {
        if self.n_pumps != N_PUMPS {
            return Err(PlantError::Config(format!(
                "n_pumps must be {N_PUMPS}, got {}",
                self.n_pumps
            )));
        }
        if !(self.safety_floor_m < self.setpoint_m
            && self.setpoint_m < self.alarm_level_m
            && self.alarm_level_m < self.tank_max_m)
        {
            return Err(PlantError::Config(
                "levels must satisfy safety_floor < setpoint < alarm < tank_max".to_string(),
            ));
        }
        if self.intake_min_m3h >= self.intake_max_m3h {
            return Err(PlantError::Config(
                "intake_min must be below intake_max".to_string(),
            ));
        }
        if self.rated_power_kw <= 0.0 || self.tank_area_m2 <= 0.0 {
            return Err(PlantError::Config(
                "rated power and tank area must be positive".to_string(),
            ));
        }
        if self.step_minutes <= 0 {
            return Err(PlantError::Config("step must be positive".to_string()));
        }
        if self.lift_height_m <= self.tank_max_m {
            return Err(PlantError::Config(
                "lift height must exceed the tank height".to_string(),
            ));
        }
        self.start_time()?;
        Ok(())
    }

    /// Total installed capacity [kW].
    pub fn installed_kw(&self) -> f64 {
        self.rated_power_kw * self.n_pumps as f64
    }

    /// Step duration in hours.
    pub fn step_hours(&self) -> f64 {
        self.step_minutes as f64 / 60.0
    }

    /// Steps per day.
    pub fn steps_per_day(&self) -> usize {
        (24 * 60 / self.step_minutes) as usize
    }

    /// Parsed simulation start time.
    pub fn start_time(&self) -> Result<chrono::NaiveDateTime, PlantError> {
        chrono::NaiveDateTime::parse_from_str(&self.start, "%Y-%m-%dT%H:%M:%S")
            .map_err(|e| PlantError::Config(format!("bad start timestamp {:?}: {e}", self.start)))
    }

    /// Pump-curve coefficient, deriving the balance default when unset:
    /// three pumps at rated power move the maximum intake at the set-point.
    pub fn pump_curve_coeff(&self) -> f64 {
        if self.pump_coeff > 0.0 {
            self.pump_coeff
        } else {
            let p3 = 3.0 * self.rated_power_kw;
            self.intake_max_m3h * (self.lift_height_m - self.setpoint_m) / p3.powf(self.pump_exponent)
        }
    }
}

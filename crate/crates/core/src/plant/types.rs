//! Record and series types produced by the synthetic plant.

use super::config::N_PUMPS;
use super::PlantError;
use chrono::NaiveDateTime;

/// All floating-point fields of the dataset are quantized to this many
/// decimals before they are used or written, so that CSV round-trips are
/// exact and regeneration under a fixed seed is bitwise reproducible.
pub const DATA_DECIMALS: u32 = 6;

/// Rounds to [`DATA_DECIMALS`] decimal places.
pub fn quantize(x: f64) -> f64 {
    let scale = 10f64.powi(DATA_DECIMALS as i32);
    (x * scale).round() / scale
}

/// One timestamped SCADA sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub timestamp: NaiveDateTime,
    /// Wastewater intake rate over the step [m³/h].
    pub intake_m3h: f64,
    /// Pumped outflow rate over the step [m³/h].
    pub outflow_m3h: f64,
    /// Tank level at the timestamp [m].
    pub level_m: f64,
    /// Active power per pump [kW].
    pub pump_power_kw: [f64; N_PUMPS],
    /// Drive frequency per pump [Hz].
    pub pump_freq_hz: [f64; N_PUMPS],
    /// Availability per pump (false while in maintenance).
    pub pump_online: [bool; N_PUMPS],
}

impl RawRecord {
    /// Total power drawn by the station [kW].
    pub fn total_power_kw(&self) -> f64 {
        self.pump_power_kw.iter().sum()
    }

    /// Structural invariants that hold independent of any configuration.
    pub fn check(&self) -> Result<(), PlantError> {
        if !(self.level_m >= 0.0) {
            return Err(PlantError::Invariant(format!(
                "negative level {} at {}",
                self.level_m, self.timestamp
            )));
        }
        if !(self.intake_m3h >= 0.0) || !(self.outflow_m3h >= 0.0) {
            return Err(PlantError::Invariant(format!(
                "negative flow at {}",
                self.timestamp
            )));
        }
        for i in 0..N_PUMPS {
            if !(self.pump_power_kw[i] >= 0.0) {
                return Err(PlantError::Invariant(format!(
                    "negative power on pump {} at {}",
                    i + 1,
                    self.timestamp
                )));
            }
            if self.pump_power_kw[i] > 0.0 && !self.pump_online[i] {
                return Err(PlantError::Invariant(format!(
                    "pump {} drawing power while offline at {}",
                    i + 1,
                    self.timestamp
                )));
            }
        }
        Ok(())
    }
}

/// The intake time series, possibly irregularly sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct IntakeSeries {
    pub timestamps: Vec<NaiveDateTime>,
    pub values_m3h: Vec<f64>,
}

impl IntakeSeries {
    pub fn new(timestamps: Vec<NaiveDateTime>, values_m3h: Vec<f64>) -> Result<Self, PlantError> {
        if timestamps.len() != values_m3h.len() {
            return Err(PlantError::Invariant(
                "timestamp/value length mismatch".to_string(),
            ));
        }
        for pair in timestamps.windows(2) {
            if pair[1] <= pair[0] {
                return Err(PlantError::Invariant(format!(
                    "timestamps not strictly increasing at {}",
                    pair[1]
                )));
            }
        }
        if values_m3h.iter().any(|v| !(*v >= 0.0)) {
            return Err(PlantError::Invariant("negative intake value".to_string()));
        }
        Ok(Self {
            timestamps,
            values_m3h,
        })
    }

    pub fn len(&self) -> usize {
        self.values_m3h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values_m3h.is_empty()
    }

    /// Extracts the intake series carried by a record stream.
    pub fn from_records(records: &[RawRecord]) -> Result<Self, PlantError> {
        Self::new(
            records.iter().map(|r| r.timestamp).collect(),
            records.iter().map(|r| r.intake_m3h).collect(),
        )
    }
}

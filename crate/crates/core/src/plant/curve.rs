//! Ground-truth pump curve of the synthetic station.

use super::config::PlantConfig;
use super::PlantError;

/// Outflow moved by the station as a function of total pumping power and
/// tank level:
///
/// ```text
/// Q(P, h) = coeff · P^exponent / (lift − h)      [m³/h]
/// ```
///
/// The exponent below one makes the curve concave and strictly increasing
/// in power; the shrinking static head makes it strictly increasing in
/// level, so the same outflow costs less power when the tank runs high.
pub fn ground_truth_outflow(
    power_total_kw: f64,
    level_m: f64,
    cfg: &PlantConfig,
) -> Result<f64, PlantError> {
    if !(power_total_kw >= 0.0) {
        return Err(PlantError::Domain(format!(
            "total power must be nonnegative, got {power_total_kw}"
        )));
    }
    if !(0.0..=cfg.tank_max_m).contains(&level_m) {
        return Err(PlantError::Domain(format!(
            "level {level_m} outside [0, {}]",
            cfg.tank_max_m
        )));
    }
    if power_total_kw == 0.0 {
        return Ok(0.0);
    }
    let head = cfg.lift_height_m - level_m;
    Ok(cfg.pump_curve_coeff() * power_total_kw.powf(cfg.pump_exponent) / head)
}

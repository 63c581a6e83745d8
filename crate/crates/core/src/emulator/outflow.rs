//! Power-to-outflow emulation: a boosted-tree fit projected onto a
//! monotone (total power × level) table.
//!
//! The raw ensemble is deliberately shallow so it generalizes instead of
//! memorizing operating pockets. Its predictions over a regular grid are
//! then made nondecreasing along the power axis by pool-adjacent-violators
//! per level row and nondecreasing along the level axis by a running
//! maximum per power column (which cannot break the power-axis order).
//! Predictions are bilinear in the table, so monotonicity holds everywhere,
//! not just on grid nodes.

use super::EmulatorError;
use crate::forecast::{fit_gbt, GbtLoss, GbtModel, GbtParams};
use crate::plant::{PlantConfig, RawRecord, N_PUMPS};
use serde::{Deserialize, Serialize};

/// Minimum cleaned records required for a fit.
pub const MIN_RECORDS: usize = 1000;
/// Maximum tree depth allowed for this model.
pub const MAX_DEPTH: usize = 3;
/// Threshold below which a pump is considered idle [kW].
const ACTIVE_EPS_KW: f64 = 0.5;

/// Number of model features: per-pump power, availability flags, active
/// count, total power, level.
pub const N_OUTFLOW_FEATURES: usize = 2 * N_PUMPS + 3;

/// Builds the ensemble feature vector for one observation.
pub fn outflow_features(
    powers_kw: &[f64; N_PUMPS],
    online: &[bool; N_PUMPS],
    level_m: f64,
) -> [f64; N_OUTFLOW_FEATURES] {
    let mut row = [0.0; N_OUTFLOW_FEATURES];
    for i in 0..N_PUMPS {
        row[i] = powers_kw[i];
        row[N_PUMPS + i] = if online[i] { 1.0 } else { 0.0 };
    }
    row[2 * N_PUMPS] = powers_kw.iter().filter(|p| **p > ACTIVE_EPS_KW).count() as f64;
    row[2 * N_PUMPS + 1] = powers_kw.iter().sum();
    row[2 * N_PUMPS + 2] = level_m;
    row
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutflowModel {
    pub gbt: GbtModel,
    /// Grid of total-power values [kW].
    pub power_grid: Vec<f64>,
    /// Grid of tank levels [m].
    pub level_grid: Vec<f64>,
    /// Monotone outflow table, level-major: `table[l * n_power + p]`.
    pub table: Vec<f64>,
    pub rated_power_kw: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutflowFitReport {
    pub n_train: usize,
    pub n_eval: usize,
    /// Mean absolute error of the projected model on held-out records.
    pub mae_m3h: f64,
    /// MAE normalized by the maximum intake rate.
    pub nmae: f64,
    pub monotonicity_violations: usize,
}

impl OutflowModel {
    /// Projected prediction from total power and level.
    pub fn predict(&self, total_power_kw: f64, level_m: f64) -> f64 {
        bilinear(
            &self.power_grid,
            &self.level_grid,
            &self.table,
            total_power_kw,
            level_m,
        )
    }

    /// Prediction for a per-pump action, masking offline units.
    pub fn predict_action(
        &self,
        setpoints_kw: &[f64; N_PUMPS],
        online: &[bool; N_PUMPS],
        level_m: f64,
    ) -> f64 {
        let total: f64 = setpoints_kw
            .iter()
            .zip(online)
            .map(|(p, ok)| if *ok { *p } else { 0.0 })
            .sum();
        self.predict(total, level_m)
    }

    /// Raw (unprojected) ensemble output, exposed for fit diagnostics.
    pub fn ensemble_raw(&self, row: &[f64; N_OUTFLOW_FEATURES]) -> f64 {
        self.gbt.predict(row)
    }

    /// Counts monotonicity violations on an arbitrary scan grid.
    pub fn monotonicity_violations(&self, n_power: usize, n_level: usize) -> usize {
        let p_max = *self.power_grid.last().expect("nonempty grid");
        let l_max = *self.level_grid.last().expect("nonempty grid");
        let mut violations = 0;
        for li in 0..n_level {
            let level = l_max * li as f64 / (n_level - 1) as f64;
            let mut prev = -f64::INFINITY;
            for pi in 0..n_power {
                let power = p_max * pi as f64 / (n_power - 1) as f64;
                let q = self.predict(power, level);
                if q < prev - 1e-9 {
                    violations += 1;
                }
                prev = q;
            }
        }
        for pi in 0..n_power {
            let power = p_max * pi as f64 / (n_power - 1) as f64;
            let mut prev = -f64::INFINITY;
            for li in 0..n_level {
                let level = l_max * li as f64 / (n_level - 1) as f64;
                let q = self.predict(power, level);
                if q < prev - 1e-9 {
                    violations += 1;
                }
                prev = q;
            }
        }
        violations
    }
}

impl OutflowModel {
    /// Exact stand-in built from the synthetic plant's true pump curve,
    /// used when the control loop must run against the ground-truth
    /// dynamics (calibration smoke path). The ensemble field is an empty
    /// model; predictions come from the tabulated curve.
    pub fn from_ground_truth(cfg: &crate::plant::PlantConfig) -> Self {
        let p_max = cfg.installed_kw();
        let n_power = 551;
        let power_grid: Vec<f64> = (0..n_power)
            .map(|i| p_max * i as f64 / (n_power - 1) as f64)
            .collect();
        let n_level = 81;
        let level_grid: Vec<f64> = (0..n_level)
            .map(|i| cfg.tank_max_m * i as f64 / (n_level - 1) as f64)
            .collect();
        let mut table = vec![0.0; n_power * n_level];
        for (li, level) in level_grid.iter().enumerate() {
            for (pi, power) in power_grid.iter().enumerate() {
                table[li * n_power + pi] =
                    crate::plant::ground_truth_outflow(*power, *level, cfg)
                        .expect("grid inside the domain");
            }
        }
        Self {
            gbt: crate::forecast::GbtModel {
                base: 0.0,
                learning_rate: 0.0,
                loss: crate::forecast::GbtLoss::Squared,
                trees: Vec::new(),
            },
            power_grid,
            level_grid,
            table,
            rated_power_kw: cfg.rated_power_kw,
        }
    }
}

/// Canonical per-pump allocation used when evaluating the ensemble on the
/// projection grid: total power split equally over the fewest pumps that
/// can carry it.
fn canonical_features(total_kw: f64, level_m: f64, rated_kw: f64) -> [f64; N_OUTFLOW_FEATURES] {
    let mut powers = [0.0; N_PUMPS];
    if total_kw > 0.0 {
        let count = ((total_kw / rated_kw).ceil() as usize).clamp(1, N_PUMPS);
        for p in powers.iter_mut().take(count) {
            *p = total_kw / count as f64;
        }
    }
    outflow_features(&powers, &[true; N_PUMPS], level_m)
}

/// Pool-adjacent-violators: least-squares isotonic projection.
fn pav(values: &mut [f64]) {
    let n = values.len();
    let mut means: Vec<f64> = Vec::with_capacity(n);
    let mut counts: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        means.push(values[i]);
        counts.push(1);
        while means.len() > 1 && means[means.len() - 2] > means[means.len() - 1] {
            let (m2, c2) = (means.pop().unwrap(), counts.pop().unwrap());
            let last = means.len() - 1;
            let c1 = counts[last];
            means[last] = (means[last] * c1 as f64 + m2 * c2 as f64) / (c1 + c2) as f64;
            counts[last] = c1 + c2;
        }
    }
    let mut idx = 0;
    for (mean, count) in means.iter().zip(&counts) {
        for _ in 0..*count {
            values[idx] = *mean;
            idx += 1;
        }
    }
}

fn bilinear(xs: &[f64], ys: &[f64], table: &[f64], x: f64, y: f64) -> f64 {
    let nx = xs.len();
    let (xi, xw) = locate(xs, x);
    let (yi, yw) = locate(ys, y);
    let v00 = table[yi * nx + xi];
    let v01 = table[yi * nx + xi + 1];
    let v10 = table[(yi + 1) * nx + xi];
    let v11 = table[(yi + 1) * nx + xi + 1];
    let a = v00 * (1.0 - xw) + v01 * xw;
    let b = v10 * (1.0 - xw) + v11 * xw;
    a * (1.0 - yw) + b * yw
}

/// Cell index and interpolation weight, clamped to the grid.
fn locate(grid: &[f64], x: f64) -> (usize, f64) {
    let n = grid.len();
    if x <= grid[0] {
        return (0, 0.0);
    }
    if x >= grid[n - 1] {
        return (n - 2, 1.0);
    }
    let i = grid.partition_point(|g| *g <= x) - 1;
    let w = (x - grid[i]) / (grid[i + 1] - grid[i]);
    (i.min(n - 2), w)
}

/// Fits the ensemble on cleaned records and builds the monotone table.
/// The last 20% of the records (chronological) are held out for the error
/// report.
pub fn fit_outflow(
    records: &[RawRecord],
    hp: &GbtParams,
    cfg: &PlantConfig,
) -> Result<(OutflowModel, OutflowFitReport), EmulatorError> {
    if hp.depth > MAX_DEPTH {
        return Err(EmulatorError::BadHyperparameters(format!(
            "outflow trees are capped at depth {MAX_DEPTH}, got {}",
            hp.depth
        )));
    }
    if records.len() < MIN_RECORDS {
        return Err(EmulatorError::NotEnoughData {
            needed: MIN_RECORDS,
            got: records.len(),
        });
    }
    let split = records.len() - records.len() / 5;
    let rows: Vec<[f64; N_OUTFLOW_FEATURES]> = records
        .iter()
        .map(|r| outflow_features(&r.pump_power_kw, &r.pump_online, r.level_m))
        .collect();
    let targets: Vec<f64> = records.iter().map(|r| r.outflow_m3h).collect();

    let gbt = fit_gbt(&rows[..split], &targets[..split], GbtLoss::Squared, hp)
        .map_err(|e| EmulatorError::FitFailed(e.to_string()))?;

    // projection grid: 5 kW x 0.25 m
    let p_max = cfg.installed_kw();
    let n_power = (p_max / 5.0).round() as usize + 1;
    let power_grid: Vec<f64> = (0..n_power)
        .map(|i| p_max * i as f64 / (n_power - 1) as f64)
        .collect();
    let n_level = (cfg.tank_max_m / 0.25).round() as usize + 1;
    let level_grid: Vec<f64> = (0..n_level)
        .map(|i| cfg.tank_max_m * i as f64 / (n_level - 1) as f64)
        .collect();

    let mut table = vec![0.0f64; n_power * n_level];
    for (li, level) in level_grid.iter().enumerate() {
        for (pi, power) in power_grid.iter().enumerate() {
            let row = canonical_features(*power, *level, cfg.rated_power_kw);
            table[li * n_power + pi] = gbt.predict(&row).max(0.0);
        }
    }
    // isotonic along the power axis per level row
    for li in 0..n_level {
        pav(&mut table[li * n_power..(li + 1) * n_power]);
    }
    // running maximum along the level axis preserves the power-axis order
    for pi in 0..n_power {
        for li in 1..n_level {
            let below = table[(li - 1) * n_power + pi];
            let here = &mut table[li * n_power + pi];
            if *here < below {
                *here = below;
            }
        }
    }

    let model = OutflowModel {
        gbt,
        power_grid,
        level_grid,
        table,
        rated_power_kw: cfg.rated_power_kw,
    };

    let eval = &records[split..];
    let mae = eval
        .iter()
        .map(|r| {
            let q = model.predict(r.total_power_kw(), r.level_m);
            (q - r.outflow_m3h).abs()
        })
        .sum::<f64>()
        / eval.len() as f64;
    let report = OutflowFitReport {
        n_train: split,
        n_eval: eval.len(),
        mae_m3h: mae,
        nmae: mae / cfg.intake_max_m3h,
        monotonicity_violations: model.monotonicity_violations(50, 10),
    };
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::ground_truth_outflow;
    use chrono::{Duration, NaiveDateTime};

    fn synthetic_records(n: usize, cfg: &PlantConfig) -> Vec<RawRecord> {
        // sweep power and level deterministically through plausible ranges
        let start =
            NaiveDateTime::parse_from_str("2016-01-01T00:00:00", "%Y-%m-%dT%H:%M:%S").unwrap();
        (0..n)
            .map(|i| {
                let total = cfg.installed_kw() * ((i * 37) % 101) as f64 / 100.0;
                let level = 4.0 + 3.0 * ((i * 17) % 89) as f64 / 88.0;
                let count = ((total / cfg.rated_power_kw).ceil() as usize).clamp(0, N_PUMPS);
                let mut powers = [0.0; N_PUMPS];
                for p in powers.iter_mut().take(count.max(1)) {
                    if total > 0.0 {
                        *p = total / count.max(1) as f64;
                    }
                }
                RawRecord {
                    timestamp: start + Duration::minutes(4 * i as i64),
                    intake_m3h: 5000.0,
                    outflow_m3h: ground_truth_outflow(total, level, cfg).unwrap(),
                    level_m: level,
                    pump_power_kw: powers,
                    pump_freq_hz: [0.0; N_PUMPS],
                    pump_online: [true; N_PUMPS],
                }
            })
            .collect()
    }

    #[test]
    fn projection_has_zero_violations() {
        let cfg = PlantConfig::default();
        let records = synthetic_records(2000, &cfg);
        let (model, report) = fit_outflow(&records, &GbtParams::default(), &cfg).unwrap();
        assert_eq!(report.monotonicity_violations, 0);
        assert_eq!(model.monotonicity_violations(50, 10), 0);
    }

    #[test]
    fn fit_on_ground_truth_is_accurate() {
        let cfg = PlantConfig::default();
        let records = synthetic_records(3000, &cfg);
        let (_, report) = fit_outflow(&records, &GbtParams::default(), &cfg).unwrap();
        assert!(report.nmae <= 0.05, "NMAE {}", report.nmae);
    }

    #[test]
    fn zero_power_predicts_near_zero_flow() {
        let cfg = PlantConfig::default();
        let records = synthetic_records(2000, &cfg);
        let (model, _) = fit_outflow(&records, &GbtParams::default(), &cfg).unwrap();
        let max_outflow = model.predict(cfg.installed_kw(), cfg.tank_max_m);
        for level in [3.0, 5.0, 7.0] {
            let q = model.predict(0.0, level);
            assert!(
                q <= 0.05 * max_outflow,
                "idle flow {q} vs max {max_outflow}"
            );
        }
    }

    #[test]
    fn deep_trees_are_rejected() {
        let cfg = PlantConfig::default();
        let records = synthetic_records(1200, &cfg);
        let hp = GbtParams {
            depth: 5,
            ..GbtParams::default()
        };
        assert!(matches!(
            fit_outflow(&records, &hp, &cfg),
            Err(EmulatorError::BadHyperparameters(_))
        ));
    }

    #[test]
    fn pav_projects_to_sorted_means() {
        let mut values = vec![1.0, 3.0, 2.0, 4.0, 0.0];
        pav(&mut values);
        for pair in values.windows(2) {
            assert!(pair[0] <= pair[1]);
        }
        // equal-weight isotonic projection preserves the total
        assert!((values.iter().sum::<f64>() - 10.0).abs() < 1e-12);
    }
}

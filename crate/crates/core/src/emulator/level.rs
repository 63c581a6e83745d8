//! Linear next-step level model.
//!
//! Multi-linear regression from {current level, intake, outflow, intake −
//! outflow} to the next recorded level. Intake, outflow and their
//! difference are exactly collinear, so the normal equations always carry
//! a ridge; the minimum-norm solution splits the mass-balance coefficient
//! across the three columns, leaving the difference column strictly
//! positive.

use super::EmulatorError;
use crate::plant::RawRecord;
use serde::{Deserialize, Serialize};

/// Minimum usable transition pairs.
pub const MIN_PAIRS: usize = 200;
const RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelModel {
    /// Coefficients on [level, intake, outflow, intake − outflow].
    pub coefficients: [f64; 4],
    pub intercept: f64,
    /// Native transition step of the training pairs [minutes].
    pub step_minutes: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelFitReport {
    pub n_train: usize,
    pub n_eval: usize,
    /// Held-out mean absolute error [m].
    pub mae_m: f64,
}

impl LevelModel {
    /// Exact mass-balance transition for a tank of the given area, used by
    /// the calibration smoke path.
    pub fn from_ground_truth(tank_area_m2: f64, step_minutes: i64) -> Self {
        Self {
            coefficients: [1.0, 0.0, 0.0, (step_minutes as f64 / 60.0) / tank_area_m2],
            intercept: 0.0,
            step_minutes,
        }
    }

    /// Next level after one native step.
    pub fn predict(&self, level_m: f64, intake_m3h: f64, outflow_m3h: f64) -> f64 {
        let x = [level_m, intake_m3h, outflow_m3h, intake_m3h - outflow_m3h];
        self.intercept
            + x.iter()
                .zip(&self.coefficients)
                .map(|(v, c)| v * c)
                .sum::<f64>()
    }

    /// Next level after `step_minutes`, scaling the predicted change
    /// linearly from the native step (the underlying balance is linear in
    /// time, so the rescaling is exact).
    pub fn next_at(
        &self,
        level_m: f64,
        intake_m3h: f64,
        outflow_m3h: f64,
        step_minutes: i64,
    ) -> f64 {
        let native = self.predict(level_m, intake_m3h, outflow_m3h);
        level_m + (native - level_m) * step_minutes as f64 / self.step_minutes as f64
    }
}

/// Fits on consecutive cleaned records exactly one window apart; the last
/// 20% of pairs are held out for the error report.
pub fn fit_level(
    records: &[RawRecord],
    step_minutes: i64,
) -> Result<(LevelModel, LevelFitReport), EmulatorError> {
    let mut xs: Vec<[f64; 4]> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for pair in records.windows(2) {
        if (pair[1].timestamp - pair[0].timestamp).num_minutes() != step_minutes {
            continue;
        }
        let r = &pair[0];
        xs.push([
            r.level_m,
            r.intake_m3h,
            r.outflow_m3h,
            r.intake_m3h - r.outflow_m3h,
        ]);
        ys.push(pair[1].level_m);
    }
    if xs.len() < MIN_PAIRS {
        return Err(EmulatorError::NotEnoughData {
            needed: MIN_PAIRS,
            got: xs.len(),
        });
    }
    let split = xs.len() - xs.len() / 5;

    // standardized ridge least squares on the training head
    let n = split;
    let mut means = [0.0f64; 4];
    let mut stds = [1.0f64; 4];
    for j in 0..4 {
        let mean = xs[..n].iter().map(|x| x[j]).sum::<f64>() / n as f64;
        let var = xs[..n].iter().map(|x| (x[j] - mean).powi(2)).sum::<f64>() / n as f64;
        means[j] = mean;
        stds[j] = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
    }
    let dim = 5;
    let mut ata = vec![0.0f64; dim * dim];
    let mut atb = vec![0.0f64; dim];
    for (x, y) in xs[..n].iter().zip(&ys[..n]) {
        let mut row = [0.0f64; 5];
        for j in 0..4 {
            row[j] = (x[j] - means[j]) / stds[j];
        }
        row[4] = 1.0;
        for a in 0..dim {
            atb[a] += row[a] * y;
            for b in a..dim {
                ata[a * dim + b] += row[a] * row[b];
            }
        }
    }
    for a in 0..dim {
        for b in 0..a {
            ata[a * dim + b] = ata[b * dim + a];
        }
    }
    let beta = crate::forecast::lqr::cholesky_solve(&ata, &atb, RIDGE * n as f64)
        .ok_or_else(|| EmulatorError::FitFailed("singular level design".into()))?;

    let mut coefficients = [0.0f64; 4];
    let mut intercept = beta[4];
    for j in 0..4 {
        coefficients[j] = beta[j] / stds[j];
        intercept -= coefficients[j] * means[j];
    }
    let model = LevelModel {
        coefficients,
        intercept,
        step_minutes,
    };

    let eval_x = &xs[split..];
    let eval_y = &ys[split..];
    let mae = eval_x
        .iter()
        .zip(eval_y)
        .map(|(x, y)| (model.predict(x[0], x[1], x[2]) - y).abs())
        .sum::<f64>()
        / eval_x.len() as f64;

    Ok((
        model,
        LevelFitReport {
            n_train: split,
            n_eval: eval_x.len(),
            mae_m: mae,
        },
    ))
}

//! Multi-horizon probabilistic forecasting of the intake rate.
//!
//! Two quantile learners (linear quantile regression and gradient-boosted
//! trees with pinball loss), two benchmarks (persistence and hour-of-day
//! empirical quantiles), and the evaluation metric suite.

pub mod ablation;
pub mod bench;
pub mod gbt;
pub mod lqr;
pub mod metrics;
pub mod pinball;
pub mod tree;

pub use ablation::{ablation_study, AblationRow};
pub use bench::{fit_cond_by_hour, persistence, CondByHourModel};
pub use gbt::{fit_gbt, fit_gbt_grid, BinnedDataset, GbtLoss, GbtModel, GbtParams};
pub use lqr::{fit_lqr, LqrModel};
pub use metrics::{
    evaluate_model_set, metric_calibration, metric_crps, metric_mae, metric_sharpness,
    CalibrationRow, FamilyEvaluation, HorizonMetrics, SharpnessRow,
};
pub use pinball::pinball_loss;

use crate::features::{build_row, schema_hash, UniformSeries, N_HORIZONS};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("not enough rows: need at least {needed}, got {got}")]
    NotEnoughRows { needed: usize, got: usize },
    #[error("feature schema mismatch: model built for {expected}, data has {found}")]
    SchemaMismatch { expected: String, found: String },
    #[error("model set malformed: {0}")]
    Malformed(String),
    #[error("empty input")]
    EmptyInput,
    #[error("bad argument: {0}")]
    BadArgument(String),
}

/// Quantile grid shared by every probabilistic model: 0.05 .. 0.95 in steps
/// of 0.05, stored in permille so map keys stay exact.
pub const ALPHA_GRID_PERMILLE: [u16; 19] = [
    50, 100, 150, 200, 250, 300, 350, 400, 450, 500, 550, 600, 650, 700, 750, 800, 850, 900, 950,
];

/// Number of quantile levels.
pub const N_ALPHAS: usize = ALPHA_GRID_PERMILLE.len();

/// Index of the median in the grid.
pub const MEDIAN_INDEX: usize = 9;

pub fn alpha_value(permille: u16) -> f64 {
    permille as f64 / 1000.0
}

/// Position of an alpha level inside the grid.
pub fn alpha_index(permille: u16) -> Option<usize> {
    ALPHA_GRID_PERMILLE.iter().position(|p| *p == permille)
}

/// A per-horizon vector of quantile forecasts for the intake rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantileForecast {
    /// Grid index of the launch time.
    pub issue_index: usize,
    /// Lead time in steps, 1-based.
    pub horizon: usize,
    /// One value per level of [`ALPHA_GRID_PERMILLE`], nondecreasing after
    /// the crossing-repair step.
    pub values: Vec<f64>,
}

impl QuantileForecast {
    pub fn value_at(&self, permille: u16) -> Option<f64> {
        alpha_index(permille).map(|i| self.values[i])
    }

    pub fn median(&self) -> f64 {
        self.values[MEDIAN_INDEX]
    }
}

/// Model family identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Lqr,
    Gbt,
    Persistence,
    CondByHour,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Lqr => "lqr",
            Family::Gbt => "gbt",
            Family::Persistence => "persistence",
            Family::CondByHour => "cond_by_hour",
        }
    }
}

/// A full fitted forecasting system: per-horizon, per-quantile submodels
/// for the learned families, or the benchmark state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForecastModelSet {
    pub family: Family,
    /// Hash of the feature layout the models were trained on.
    pub schema_hash: String,
    pub seed: u64,
    pub horizons: usize,
    /// `horizons × N_ALPHAS` linear models, horizon-major.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lqr_models: Vec<LqrModel>,
    /// `horizons × N_ALPHAS` boosted models, horizon-major.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gbt_models: Vec<GbtModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cond_by_hour: Option<CondByHourModel>,
}

impl ForecastModelSet {
    /// Checks the submodel-count invariant for the learned families.
    pub fn validate(&self) -> Result<(), ForecastError> {
        let expected = self.horizons * N_ALPHAS;
        let count = match self.family {
            Family::Lqr => self.lqr_models.len(),
            Family::Gbt => self.gbt_models.len(),
            Family::Persistence => return Ok(()),
            Family::CondByHour => {
                return if self.cond_by_hour.is_some() {
                    Ok(())
                } else {
                    Err(ForecastError::Malformed("missing hourly model".into()))
                }
            }
        };
        if count != expected {
            return Err(ForecastError::Malformed(format!(
                "expected {expected} submodels, found {count}"
            )));
        }
        Ok(())
    }

    fn check_schema(&self) -> Result<(), ForecastError> {
        let current = schema_hash();
        if self.schema_hash != current {
            return Err(ForecastError::SchemaMismatch {
                expected: self.schema_hash.clone(),
                found: current,
            });
        }
        Ok(())
    }

    /// Evaluates only the requested quantile levels per horizon, the fast
    /// path behind the per-step control-state blocks. Crossings are
    /// repaired within the returned subset. Layout: `[quantile][horizon]`.
    pub fn predict_levels(
        &self,
        series: &UniformSeries,
        t: usize,
        permilles: &[u16],
    ) -> Result<Option<Vec<Vec<f64>>>, ForecastError> {
        let mut out = vec![vec![0.0; self.horizons]; permilles.len()];
        match self.family {
            Family::Lqr | Family::Gbt => {
                self.check_schema()?;
                let indices: Vec<usize> = permilles
                    .iter()
                    .map(|p| {
                        alpha_index(*p).ok_or_else(|| {
                            ForecastError::BadArgument(format!("alpha {p} not on the grid"))
                        })
                    })
                    .collect::<Result<_, _>>()?;
                for k in 1..=self.horizons {
                    let Some(row) = build_row(series, t, k) else {
                        return Ok(None);
                    };
                    let mut values: Vec<f64> = indices
                        .iter()
                        .map(|a| {
                            let idx = (k - 1) * N_ALPHAS + a;
                            let v = match self.family {
                                Family::Lqr => self.lqr_models[idx].predict(&row),
                                Family::Gbt => self.gbt_models[idx].predict(&row),
                                _ => unreachable!(),
                            };
                            v.max(0.0)
                        })
                        .collect();
                    values.sort_by(|a, b| a.partial_cmp(b).expect("finite quantiles"));
                    for (qi, v) in values.into_iter().enumerate() {
                        out[qi][k - 1] = v;
                    }
                }
            }
            Family::Persistence => {
                let Some(points) = persistence(series, t, self.horizons) else {
                    return Ok(None);
                };
                for row in out.iter_mut() {
                    row.copy_from_slice(&points);
                }
            }
            Family::CondByHour => {
                let model = self
                    .cond_by_hour
                    .as_ref()
                    .ok_or_else(|| ForecastError::Malformed("missing hourly model".into()))?;
                for k in 1..=self.horizons {
                    let q = model.quantiles_for(series.timestamp(t + k));
                    for (qi, p) in permilles.iter().enumerate() {
                        let idx = alpha_index(*p).ok_or_else(|| {
                            ForecastError::BadArgument(format!("alpha {p} not on the grid"))
                        })?;
                        out[qi][k - 1] = q[idx];
                    }
                }
            }
        }
        Ok(Some(out))
    }

    /// Issues forecasts for all horizons at launch index `t`. Returns
    /// `None` when the feature row cannot be built (missing samples).
    ///
    /// Raw submodel outputs may cross; the published quantiles are repaired
    /// by sorting, which preserves the multiset of values.
    pub fn predict(
        &self,
        series: &UniformSeries,
        t: usize,
    ) -> Result<Option<Vec<QuantileForecast>>, ForecastError> {
        let mut out = Vec::with_capacity(self.horizons);
        match self.family {
            Family::Lqr | Family::Gbt => {
                self.check_schema()?;
                for k in 1..=self.horizons {
                    let Some(row) = build_row(series, t, k) else {
                        return Ok(None);
                    };
                    let mut values = Vec::with_capacity(N_ALPHAS);
                    for a in 0..N_ALPHAS {
                        let idx = (k - 1) * N_ALPHAS + a;
                        let v = match self.family {
                            Family::Lqr => self.lqr_models[idx].predict(&row),
                            Family::Gbt => self.gbt_models[idx].predict(&row),
                            _ => unreachable!(),
                        };
                        values.push(v.max(0.0));
                    }
                    values.sort_by(|a, b| a.partial_cmp(b).expect("finite quantiles"));
                    out.push(QuantileForecast {
                        issue_index: t,
                        horizon: k,
                        values,
                    });
                }
            }
            Family::Persistence => {
                let Some(points) = persistence(series, t, self.horizons) else {
                    return Ok(None);
                };
                for (k, p) in points.iter().enumerate() {
                    out.push(QuantileForecast {
                        issue_index: t,
                        horizon: k + 1,
                        values: vec![*p; N_ALPHAS],
                    });
                }
            }
            Family::CondByHour => {
                let model = self
                    .cond_by_hour
                    .as_ref()
                    .ok_or_else(|| ForecastError::Malformed("missing hourly model".into()))?;
                for k in 1..=self.horizons {
                    let ts = series.timestamp(t + k);
                    out.push(QuantileForecast {
                        issue_index: t,
                        horizon: k,
                        values: model.quantiles_for(ts).to_vec(),
                    });
                }
            }
        }
        Ok(Some(out))
    }
}

/// Fits a model set of the requested family on the chronological training
/// range of the series (launch indices strictly below `train_end`).
pub fn fit_model_set(
    family: Family,
    series: &UniformSeries,
    train_end: usize,
    gbt_params: &GbtParams,
    seed: u64,
) -> Result<ForecastModelSet, ForecastError> {
    let tables = crate::features::build_matrix(series, N_HORIZONS)
        .map_err(|e| ForecastError::BadArgument(e.to_string()))?;
    let mut set = ForecastModelSet {
        family,
        schema_hash: schema_hash(),
        seed,
        horizons: N_HORIZONS,
        lqr_models: Vec::new(),
        gbt_models: Vec::new(),
        cond_by_hour: None,
    };
    match family {
        Family::Lqr | Family::Gbt => {
            for table in &tables {
                let upto = table
                    .launch_indices
                    .iter()
                    .position(|t| *t >= train_end)
                    .unwrap_or(table.len());
                let rows = &table.rows[..upto];
                let targets = &table.targets[..upto];
                if family == Family::Gbt {
                    let binned = BinnedDataset::new(rows);
                    for permille in ALPHA_GRID_PERMILLE {
                        let model = gbt::fit_gbt_binned(
                            &binned,
                            targets,
                            GbtLoss::Quantile(alpha_value(permille)),
                            gbt_params,
                        )?;
                        set.gbt_models.push(model);
                    }
                } else {
                    for permille in ALPHA_GRID_PERMILLE {
                        set.lqr_models
                            .push(fit_lqr(rows, targets, alpha_value(permille))?);
                    }
                }
            }
        }
        Family::Persistence => {}
        Family::CondByHour => {
            set.cond_by_hour = Some(fit_cond_by_hour(series, train_end)?);
        }
    }
    set.validate()?;
    Ok(set)
}

/// Linear-interpolated empirical quantile of a sorted slice.
pub(crate) fn quantile_sorted(sorted: &[f64], alpha: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let pos = alpha.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_interpolation() {
        let data = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&data, 0.0), 1.0);
        assert_eq!(quantile_sorted(&data, 1.0), 4.0);
        assert_eq!(quantile_sorted(&data, 0.5), 2.5);
    }

    #[test]
    fn alpha_grid_is_sorted_and_symmetric() {
        for pair in ALPHA_GRID_PERMILLE.windows(2) {
            assert!(pair[0] < pair[1]);
        }
        for (lo, hi) in ALPHA_GRID_PERMILLE
            .iter()
            .zip(ALPHA_GRID_PERMILLE.iter().rev())
        {
            assert_eq!(lo + hi, 1000);
        }
        assert_eq!(ALPHA_GRID_PERMILLE[MEDIAN_INDEX], 500);
    }
}

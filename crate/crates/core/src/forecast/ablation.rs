//! Feature-combination ablation at the first lead time, fitted with
//! linear quantile regression.

use super::lqr::{cols, fit_lqr_columns, N_EXPANDED};
use super::metrics::{metric_crps, metric_mae};
use super::{ForecastError, ALPHA_GRID_PERMILLE, MEDIAN_INDEX, N_ALPHAS};
use crate::features::FeatureTable;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationRow {
    pub id: String,
    pub mae: f64,
    pub crps: f64,
}

fn group(range: std::ops::Range<usize>) -> Vec<usize> {
    range.collect()
}

/// The ten feature combinations, from single-feature models to the full
/// set: hour only, previous-day value only, lags only, all calendar, and
/// the cumulative combinations up to everything.
fn combinations() -> Vec<(String, Vec<usize>)> {
    let hour = group(cols::HOUR);
    let wday = group(cols::WDAY);
    let month = group(cols::MONTH);
    let lags = group(cols::LAGS);
    let calendar: Vec<usize> = hour
        .iter()
        .chain(&wday)
        .chain(&month)
        .copied()
        .collect();
    let mut rows: Vec<(String, Vec<usize>)> = Vec::new();
    rows.push(("M1".into(), hour.clone()));
    rows.push(("M2".into(), vec![cols::LAG24H]));
    rows.push(("M3".into(), lags.clone()));
    rows.push(("M4".into(), calendar.clone()));
    let with = |base: &[usize], extra: &[usize]| {
        let mut v = base.to_vec();
        v.extend_from_slice(extra);
        v
    };
    rows.push(("M5".into(), with(&calendar, &[cols::COT])));
    rows.push(("M6".into(), with(&calendar, &[cols::GOD])));
    let cal_lags_24 = with(&with(&calendar, &lags), &[cols::LAG24H]);
    rows.push(("M7".into(), cal_lags_24.clone()));
    rows.push(("M8".into(), with(&cal_lags_24, &[cols::COT])));
    rows.push(("M9".into(), with(&cal_lags_24, &[cols::GOD])));
    rows.push(("M10".into(), (0..N_EXPANDED).collect()));
    rows
}

/// Fits each combination on the chronological head of the first-horizon
/// table and scores MAE (median) and CRPS (alpha grid) on the tail.
pub fn ablation_study(
    table: &FeatureTable,
    train_fraction: f64,
) -> Result<Vec<AblationRow>, ForecastError> {
    if table.horizon != 1 {
        return Err(ForecastError::BadArgument(
            "ablation runs on the first lead time".into(),
        ));
    }
    let n = table.len();
    let split = ((n as f64) * train_fraction) as usize;
    if split < super::lqr::MIN_ROWS || n - split < 50 {
        return Err(ForecastError::NotEnoughRows {
            needed: super::lqr::MIN_ROWS,
            got: split,
        });
    }
    let (train_rows, test_rows) = table.rows.split_at(split);
    let (train_y, test_y) = table.targets.split_at(split);

    let mut out = Vec::new();
    for (id, columns) in combinations() {
        let mut quantiles: Vec<Vec<f64>> = vec![Vec::with_capacity(N_ALPHAS); test_rows.len()];
        let mut medians = vec![0.0; test_rows.len()];
        for permille in ALPHA_GRID_PERMILLE {
            let alpha = permille as f64 / 1000.0;
            let model = fit_lqr_columns(train_rows, train_y, alpha, &columns)?;
            for (i, row) in test_rows.iter().enumerate() {
                quantiles[i].push(model.predict(row).max(0.0));
            }
        }
        for (i, q) in quantiles.iter_mut().enumerate() {
            q.sort_by(|a, b| a.partial_cmp(b).expect("finite predictions"));
            medians[i] = q[MEDIAN_INDEX];
        }
        out.push(AblationRow {
            id,
            mae: metric_mae(test_y, &medians)?,
            crps: metric_crps(test_y, &quantiles)?,
        });
    }
    Ok(out)
}

/// Convenience accessor used by the acceptance assertions.
pub fn row<'a>(rows: &'a [AblationRow], id: &str) -> &'a AblationRow {
    rows.iter().find(|r| r.id == id).expect("known ablation id")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_ten_rows_with_expected_ids() {
        let ids: Vec<String> = combinations().into_iter().map(|(id, _)| id).collect();
        assert_eq!(
            ids,
            (1..=10).map(|i| format!("M{i}")).collect::<Vec<String>>()
        );
    }

    #[test]
    fn m10_uses_every_expanded_column() {
        let combos = combinations();
        let (_, full) = &combos[9];
        assert_eq!(full.len(), N_EXPANDED);
    }
}

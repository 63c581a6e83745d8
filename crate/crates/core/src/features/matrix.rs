//! Per-horizon feature matrices for the multi-step forecasting models.
//!
//! A row launched at grid index `t` for horizon `k` carries the eight lags
//! `W_{t−1} .. W_{t−8}`, the launch-time calendar, the change-over-time and
//! growth-or-decay ratios at `t−1`, and the intake observed exactly 24 h
//! before the target time `t+k`. The target is `W_{t+k}`. Everything except
//! the calendar is strictly backward-looking relative to the launch time.

use super::derive::{change_over_time, growth_or_decay};
use super::resample::UniformSeries;
use super::FeatureError;
use crate::io::sha256_hex;
use chrono::{Datelike, Timelike};

/// Number of short lags.
pub const N_LAGS: usize = 8;
/// Forecast horizons (2-minute steps, 40 minutes total).
pub const N_HORIZONS: usize = 20;
/// Feature column count: lags + hour/wday/month + CoT + GoD + 24 h lag.
pub const N_FEATURES: usize = N_LAGS + 6;

pub const COL_HOUR: usize = N_LAGS;
pub const COL_WDAY: usize = N_LAGS + 1;
pub const COL_MONTH: usize = N_LAGS + 2;
pub const COL_COT: usize = N_LAGS + 3;
pub const COL_GOD: usize = N_LAGS + 4;
pub const COL_LAG24H: usize = N_LAGS + 5;

/// Column names in serialization order.
pub fn feature_names() -> Vec<String> {
    let mut names: Vec<String> = (1..=N_LAGS).map(|i| format!("lag{i}")).collect();
    names.extend(
        ["hour", "wday", "month", "cot", "god", "lag24h"]
            .iter()
            .map(|s| s.to_string()),
    );
    names
}

/// Hash of the feature layout, embedded in trained models so that a model
/// is never applied to a differently shaped row.
pub fn schema_hash() -> String {
    sha256_hex(format!("{};horizons={N_HORIZONS}", feature_names().join(",")).as_bytes())
}

/// The design matrix for one forecast horizon.
#[derive(Debug, Clone)]
pub struct FeatureTable {
    pub horizon: usize,
    /// Grid index of each row's launch time.
    pub launch_indices: Vec<usize>,
    pub rows: Vec<[f64; N_FEATURES]>,
    pub targets: Vec<f64>,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Builds the feature row issued at grid index `t` for horizon `k`, or
/// `None` when any constituent sample is missing.
pub fn build_row(series: &UniformSeries, t: usize, k: usize) -> Option<[f64; N_FEATURES]> {
    let day = series.steps_per_day();
    if t < N_LAGS + 1 {
        return None;
    }
    let lag24_index = (t + k).checked_sub(day)?;

    let mut row = [0.0f64; N_FEATURES];
    for lag in 1..=N_LAGS {
        row[lag - 1] = series.value(t - lag)?;
    }
    let ts = series.timestamp(t);
    row[COL_HOUR] = ts.hour() as f64;
    row[COL_WDAY] = ts.weekday().num_days_from_monday() as f64;
    row[COL_MONTH] = ts.month() as f64;

    let w_prev = series.value(t - 2)?;
    let w_curr = series.value(t - 1)?;
    row[COL_COT] = change_over_time(w_prev, w_curr, series.step_minutes as f64).ok()?;
    row[COL_GOD] = growth_or_decay(w_prev, w_curr);
    row[COL_LAG24H] = series.value(lag24_index)?;
    Some(row)
}

/// Builds one table per horizon `1..=horizons`.
///
/// Rows with any missing constituent are dropped; an error is returned when
/// some horizon ends up with no rows at all (the series is shorter than a
/// day plus the lag window).
pub fn build_matrix(
    series: &UniformSeries,
    horizons: usize,
) -> Result<Vec<FeatureTable>, FeatureError> {
    if horizons == 0 || horizons > N_HORIZONS {
        return Err(FeatureError::BadArgument(format!(
            "horizons must be in 1..={N_HORIZONS}"
        )));
    }
    let n = series.len();
    let mut tables = Vec::with_capacity(horizons);
    for k in 1..=horizons {
        let mut table = FeatureTable {
            horizon: k,
            launch_indices: Vec::new(),
            rows: Vec::new(),
            targets: Vec::new(),
        };
        for t in (N_LAGS + 1)..n {
            if t + k >= n {
                break;
            }
            let Some(row) = build_row(series, t, k) else {
                continue;
            };
            let Some(target) = series.value(t + k) else {
                continue;
            };
            table.launch_indices.push(t);
            table.rows.push(row);
            table.targets.push(target);
        }
        if table.is_empty() {
            return Err(FeatureError::InsufficientData(format!(
                "no complete rows for horizon {k}; the series must span at least 24 h plus the lag window"
            )));
        }
        tables.push(table);
    }
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDateTime;

    fn uniform(values: Vec<Option<f64>>) -> UniformSeries {
        UniformSeries {
            start: NaiveDateTime::parse_from_str("2016-01-04T00:00:00", "%Y-%m-%dT%H:%M:%S")
                .unwrap(),
            step_minutes: 2,
            values,
        }
    }

    #[test]
    fn constant_series_gives_flat_rows() {
        let series = uniform(vec![Some(7000.0); 800]);
        let tables = build_matrix(&series, 3).unwrap();
        for table in &tables {
            for (row, target) in table.rows.iter().zip(&table.targets) {
                for lag in 0..N_LAGS {
                    assert_eq!(row[lag], 7000.0);
                }
                assert_eq!(row[COL_COT], 0.0);
                assert_eq!(row[COL_GOD], 0.0);
                assert_eq!(row[COL_LAG24H], 7000.0);
                assert_eq!(*target, 7000.0);
            }
        }
    }

    #[test]
    fn minimal_length_emits_one_row_per_horizon() {
        // window arithmetic: horizon k launches at t >= 720 - k with target
        // t + k <= n - 1, so n = 721 gives exactly one row for every k
        let series = uniform((0..721).map(|i| Some(i as f64)).collect());
        let tables = build_matrix(&series, N_HORIZONS).unwrap();
        for table in &tables {
            assert_eq!(table.len(), 1, "horizon {}", table.horizon);
            let t = table.launch_indices[0];
            assert_eq!(t + table.horizon, 720);
            assert_eq!(table.rows[0][COL_LAG24H], 0.0);
            assert_eq!(table.targets[0], 720.0);
        }
        let shorter = uniform((0..720).map(|i| Some(i as f64)).collect());
        assert!(matches!(
            build_matrix(&shorter, N_HORIZONS),
            Err(FeatureError::InsufficientData(_))
        ));
    }

    #[test]
    fn tables_share_feature_columns_except_lag24h() {
        let series = uniform((0..900).map(|i| Some((i * i % 977) as f64)).collect());
        let tables = build_matrix(&series, N_HORIZONS).unwrap();
        assert_eq!(tables.len(), N_HORIZONS);
        // compare rows launched at the same t across horizons; the last
        // launch of the longest horizon is valid for every shorter one
        let t_ref = *tables[N_HORIZONS - 1].launch_indices.last().unwrap();
        let ref_pos = tables[0]
            .launch_indices
            .iter()
            .position(|t| *t == t_ref)
            .unwrap();
        let ref_row = tables[0].rows[ref_pos];
        for table in &tables {
            let pos = table
                .launch_indices
                .iter()
                .position(|t| *t == t_ref)
                .expect("launch time present in every table");
            for col in 0..N_FEATURES {
                if col == COL_LAG24H {
                    continue;
                }
                assert_eq!(table.rows[pos][col], ref_row[col], "column {col}");
            }
        }
    }

    #[test]
    fn rows_with_missing_constituents_are_dropped() {
        let mut values: Vec<Option<f64>> = (0..800).map(|i| Some(i as f64)).collect();
        values[730] = None;
        let series = uniform(values);
        let tables = build_matrix(&series, 1).unwrap();
        let table = &tables[0];
        for (pos, t) in table.launch_indices.iter().enumerate() {
            // no lag, target or 24h constituent may touch index 730
            assert!(*t + 1 != 730, "target hit the hole");
            assert!(!(*t - N_LAGS..*t).contains(&730), "lag window hit the hole");
            assert!(*t + 1 != 730 + 720, "24h lag hit the hole at row {pos}");
        }
    }

    #[test]
    fn backward_looking_guarantee() {
        // mutating any sample at or after the launch index must leave the
        // row unchanged (except via the 24h target-side lag, which reaches
        // t + k - 720 < t)
        let base: Vec<Option<f64>> = (0..900).map(|i| Some((i % 127) as f64 + 1.0)).collect();
        let series = uniform(base.clone());
        let t = 850;
        let k = 5;
        let row = build_row(&series, t, k).unwrap();
        let mut poisoned = base;
        for v in poisoned.iter_mut().skip(t) {
            *v = Some(999_999.0);
        }
        let poisoned_series = uniform(poisoned);
        let row_poisoned = build_row(&poisoned_series, t, k).unwrap();
        assert_eq!(row, row_poisoned);
    }
}

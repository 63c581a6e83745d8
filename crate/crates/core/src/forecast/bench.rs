//! Benchmark forecasters: persistence and hour-of-day empirical quantiles.

use super::{quantile_sorted, ForecastError, ALPHA_GRID_PERMILLE};
use crate::features::UniformSeries;
use chrono::Timelike;
use serde::{Deserialize, Serialize};

/// Persistence point forecast: every horizon repeats the value observed at
/// the launch time. `None` when that value is missing.
pub fn persistence(series: &UniformSeries, t: usize, horizons: usize) -> Option<Vec<f64>> {
    let current = series.value(t)?;
    Some(vec![current; horizons])
}

/// Empirical quantiles of the intake conditioned on the hour of day.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CondByHourModel {
    /// Quantile vector per hour; hours never observed fall back to the
    /// global quantiles.
    pub per_hour: Vec<Option<Vec<f64>>>,
    pub global: Vec<f64>,
}

impl CondByHourModel {
    /// Quantiles for the hour a target timestamp lands in.
    pub fn quantiles_for(&self, ts: chrono::NaiveDateTime) -> &[f64] {
        match &self.per_hour[ts.hour() as usize] {
            Some(q) => q,
            None => &self.global,
        }
    }
}

fn quantile_vector(values: &mut Vec<f64>) -> Vec<f64> {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite intake"));
    ALPHA_GRID_PERMILLE
        .iter()
        .map(|p| quantile_sorted(values, *p as f64 / 1000.0))
        .collect()
}

/// Fits the hourly model on launch indices strictly below `train_end`.
/// Requires at least seven days of grid coverage.
pub fn fit_cond_by_hour(
    series: &UniformSeries,
    train_end: usize,
) -> Result<CondByHourModel, ForecastError> {
    let needed = 7 * series.steps_per_day();
    if train_end < needed {
        return Err(ForecastError::NotEnoughRows {
            needed,
            got: train_end,
        });
    }
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); 24];
    let mut all = Vec::new();
    for t in 0..train_end.min(series.len()) {
        let Some(v) = series.value(t) else { continue };
        buckets[series.timestamp(t).hour() as usize].push(v);
        all.push(v);
    }
    if all.is_empty() {
        return Err(ForecastError::EmptyInput);
    }
    let global = quantile_vector(&mut all);
    let per_hour = buckets
        .into_iter()
        .map(|mut b| {
            if b.is_empty() {
                None
            } else {
                Some(quantile_vector(&mut b))
            }
        })
        .collect();
    Ok(CondByHourModel { per_hour, global })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast::N_ALPHAS;
    use chrono::NaiveDateTime;

    fn series(values: Vec<Option<f64>>) -> UniformSeries {
        UniformSeries {
            start: NaiveDateTime::parse_from_str("2016-01-01T00:00:00", "%Y-%m-%dT%H:%M:%S")
                .unwrap(),
            step_minutes: 2,
            values,
        }
    }

    #[test]
    fn persistence_repeats_launch_value() {
        let s = series((0..100).map(|i| Some(i as f64)).collect());
        let points = persistence(&s, 50, 20).unwrap();
        assert_eq!(points.len(), 20);
        assert!(points.iter().all(|p| *p == 50.0));
        // identical calls agree
        assert_eq!(points, persistence(&s, 50, 20).unwrap());
    }

    #[test]
    fn persistence_error_after_jump_equals_jump_size() {
        let mut values: Vec<Option<f64>> = vec![Some(100.0); 60];
        values[31] = Some(175.0);
        let s = series(values);
        let points = persistence(&s, 30, 1).unwrap();
        let error = (s.value(31).unwrap() - points[0]).abs();
        assert_eq!(error, 75.0);
    }

    #[test]
    fn single_repeated_day_reproduces_hourly_values() {
        // value = 100 + hour, repeated for 8 days: every hourly bucket is
        // constant, so all its quantiles equal that day's hourly value
        let day: Vec<f64> = (0..720).map(|i| 100.0 + (i / 30) as f64).collect();
        let values: Vec<Option<f64>> = (0..8 * 720).map(|i| Some(day[i % 720])).collect();
        let s = series(values);
        let model = fit_cond_by_hour(&s, 8 * 720).unwrap();
        for hour in 0..24 {
            let bucket = model.per_hour[hour].as_ref().unwrap();
            assert_eq!(bucket[super::super::MEDIAN_INDEX], 100.0 + hour as f64);
            assert_eq!(bucket[0], bucket[N_ALPHAS - 1]);
            for pair in bucket.windows(2) {
                assert!(pair[0] <= pair[1], "quantiles must not cross");
            }
        }
    }

    #[test]
    fn too_little_history_rejected() {
        let s = series(vec![Some(1.0); 1000]);
        assert!(matches!(
            fit_cond_by_hour(&s, 1000),
            Err(ForecastError::NotEnoughRows { .. })
        ));
    }

    #[test]
    fn empty_hour_falls_back_to_global() {
        // values present only between 06:00 and 18:00
        let values: Vec<Option<f64>> = (0..9 * 720)
            .map(|i| {
                let minute_of_day = (i % 720) * 2;
                let hour = minute_of_day / 60;
                if (6..18).contains(&hour) {
                    Some(hour as f64 * 10.0)
                } else {
                    None
                }
            })
            .collect();
        let s = series(values);
        let model = fit_cond_by_hour(&s, 9 * 720).unwrap();
        assert!(model.per_hour[2].is_none());
        let ts = NaiveDateTime::parse_from_str("2016-01-05T02:00:00", "%Y-%m-%dT%H:%M:%S").unwrap();
        assert_eq!(model.quantiles_for(ts), model.global.as_slice());
    }
}

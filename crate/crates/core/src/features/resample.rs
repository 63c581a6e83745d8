//! Resampling of the irregular intake series onto the 2-minute grid.

use super::FeatureError;
use crate::plant::IntakeSeries;
use chrono::{Duration, NaiveDateTime};

/// Gaps up to this long are filled by time-weighted linear interpolation;
/// anything longer is left missing and reported.
pub const FILL_LIMIT_MINUTES: i64 = 10;

/// A stretch of the uniform grid left without values.
#[derive(Debug, Clone, PartialEq)]
pub struct Gap {
    /// Last observed sample before the gap.
    pub from: NaiveDateTime,
    /// First observed sample after the gap.
    pub to: NaiveDateTime,
    /// Number of grid points left missing.
    pub missing_points: usize,
}

/// The intake series on a uniform grid; `None` marks unfillable gaps.
#[derive(Debug, Clone)]
pub struct UniformSeries {
    pub start: NaiveDateTime,
    pub step_minutes: i64,
    pub values: Vec<Option<f64>>,
}

impl UniformSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, index: usize) -> NaiveDateTime {
        self.start + Duration::minutes(self.step_minutes * index as i64)
    }

    pub fn value(&self, index: usize) -> Option<f64> {
        self.values.get(index).copied().flatten()
    }

    /// Steps making up 24 hours on this grid.
    pub fn steps_per_day(&self) -> usize {
        (24 * 60 / self.step_minutes) as usize
    }
}

/// Projects the series onto a `step_minutes` grid anchored at the first
/// sample. Exact grid hits are taken verbatim; interior points are filled
/// by linear interpolation when the surrounding observation gap is within
/// [`FILL_LIMIT_MINUTES`], and left missing otherwise.
pub fn resample_uniform(
    series: &IntakeSeries,
    step_minutes: i64,
) -> Result<(UniformSeries, Vec<Gap>), FeatureError> {
    if series.is_empty() {
        return Err(FeatureError::EmptySeries);
    }
    if step_minutes <= 0 {
        return Err(FeatureError::BadArgument("step must be positive".into()));
    }
    let start = series.timestamps[0];
    let end = series.timestamps[series.len() - 1];
    let total_minutes = (end - start).num_minutes();
    let n_points = (total_minutes / step_minutes) as usize + 1;

    let mut values = Vec::with_capacity(n_points);
    let mut gaps: Vec<Gap> = Vec::new();
    // index of the last sample with timestamp <= grid time
    let mut left = 0usize;

    for i in 0..n_points {
        let ts = start + Duration::minutes(step_minutes * i as i64);
        while left + 1 < series.len() && series.timestamps[left + 1] <= ts {
            left += 1;
        }
        let value = if series.timestamps[left] == ts {
            Some(series.values_m3h[left])
        } else {
            // ts is strictly between samples `left` and `left + 1`
            let t0 = series.timestamps[left];
            let t1 = series.timestamps[left + 1];
            let span = (t1 - t0).num_seconds() as f64;
            if (t1 - t0).num_minutes() <= FILL_LIMIT_MINUTES {
                let w = (ts - t0).num_seconds() as f64 / span;
                let v0 = series.values_m3h[left];
                let v1 = series.values_m3h[left + 1];
                Some(v0 + (v1 - v0) * w)
            } else {
                match gaps.last_mut() {
                    Some(g) if g.from == t0 => g.missing_points += 1,
                    _ => gaps.push(Gap {
                        from: t0,
                        to: t1,
                        missing_points: 1,
                    }),
                }
                None
            }
        };
        values.push(value);
    }

    Ok((
        UniformSeries {
            start,
            step_minutes,
            values,
        },
        gaps,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(minutes: i64) -> NaiveDateTime {
        NaiveDateTime::parse_from_str("2016-01-01T00:00:00", "%Y-%m-%dT%H:%M:%S").unwrap()
            + Duration::minutes(minutes)
    }

    #[test]
    fn uniform_input_is_identity() {
        let series = IntakeSeries::new(
            (0..10).map(|i| ts(2 * i)).collect(),
            (0..10).map(|i| 100.0 + i as f64).collect(),
        )
        .unwrap();
        let (uniform, gaps) = resample_uniform(&series, 2).unwrap();
        assert!(gaps.is_empty());
        assert_eq!(uniform.len(), 10);
        for i in 0..10 {
            assert_eq!(uniform.value(i), Some(100.0 + i as f64));
        }
    }

    #[test]
    fn linear_midpoint_fill() {
        let series =
            IntakeSeries::new(vec![ts(0), ts(4)], vec![100.0, 200.0]).unwrap();
        let (uniform, gaps) = resample_uniform(&series, 2).unwrap();
        assert!(gaps.is_empty());
        assert_eq!(uniform.value(1), Some(150.0));
    }

    #[test]
    fn long_gap_reported_and_left_missing() {
        let series = IntakeSeries::new(
            vec![ts(0), ts(2), ts(32), ts(34)],
            vec![10.0, 20.0, 30.0, 40.0],
        )
        .unwrap();
        let (uniform, gaps) = resample_uniform(&series, 2).unwrap();
        assert_eq!(gaps.len(), 1);
        assert_eq!(gaps[0].from, ts(2));
        assert_eq!(gaps[0].to, ts(32));
        assert_eq!(gaps[0].missing_points, 14);
        for i in 2..16 {
            assert_eq!(uniform.value(i), None, "index {i}");
        }
        assert_eq!(uniform.value(16), Some(30.0));
    }

    #[test]
    fn three_minute_gaps_are_filled() {
        let series = IntakeSeries::new(
            vec![ts(0), ts(3), ts(5), ts(8)],
            vec![0.0, 300.0, 500.0, 800.0],
        )
        .unwrap();
        let (uniform, gaps) = resample_uniform(&series, 2).unwrap();
        assert!(gaps.is_empty());
        assert_eq!(uniform.len(), 5);
        assert_eq!(uniform.value(1), Some(200.0));
        assert_eq!(uniform.value(2), Some(400.0));
        assert_eq!(uniform.value(3), Some(600.0));
    }

    #[test]
    fn empty_series_is_an_error() {
        let series = IntakeSeries::new(vec![], vec![]).unwrap();
        assert!(matches!(
            resample_uniform(&series, 2),
            Err(FeatureError::EmptySeries)
        ));
    }
}

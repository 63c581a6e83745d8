//! Forecast verification: MAE, quantile-based CRPS, calibration and
//! sharpness, plus the driver that scores a fitted family on a holdout
//! range of the series.

use super::pinball::pinball_loss;
use super::{
    ForecastError, ForecastModelSet, QuantileForecast, ALPHA_GRID_PERMILLE, MEDIAN_INDEX, N_ALPHAS,
};
use crate::features::UniformSeries;
use serde::{Deserialize, Serialize};

/// Point skill of the median forecast.
pub fn metric_mae(observations: &[f64], medians: &[f64]) -> Result<f64, ForecastError> {
    if observations.is_empty() || observations.len() != medians.len() {
        return Err(ForecastError::EmptyInput);
    }
    Ok(observations
        .iter()
        .zip(medians)
        .map(|(y, m)| (y - m).abs())
        .sum::<f64>()
        / observations.len() as f64)
}

/// Quantile-based CRPS: pinball loss averaged over the alpha grid, times
/// two. Equals zero only when every quantile matches the observation.
pub fn metric_crps(observations: &[f64], quantiles: &[Vec<f64>]) -> Result<f64, ForecastError> {
    if observations.is_empty() || observations.len() != quantiles.len() {
        return Err(ForecastError::EmptyInput);
    }
    let mut total = 0.0;
    for (y, q) in observations.iter().zip(quantiles) {
        debug_assert_eq!(q.len(), N_ALPHAS);
        let mut s = 0.0;
        for (i, permille) in ALPHA_GRID_PERMILLE.iter().enumerate() {
            s += pinball_loss(*y, q[i], *permille as f64 / 1000.0);
        }
        total += 2.0 * s / N_ALPHAS as f64;
    }
    Ok(total / observations.len() as f64)
}

/// Per-level calibration: empirical coverage minus nominal proportion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub alpha: f64,
    pub empirical: f64,
    pub deviation: f64,
}

pub fn metric_calibration(
    observations: &[f64],
    quantiles: &[Vec<f64>],
) -> Result<Vec<CalibrationRow>, ForecastError> {
    if observations.is_empty() || observations.len() != quantiles.len() {
        return Err(ForecastError::EmptyInput);
    }
    let n = observations.len() as f64;
    Ok(ALPHA_GRID_PERMILLE
        .iter()
        .enumerate()
        .map(|(i, permille)| {
            let alpha = *permille as f64 / 1000.0;
            let covered = observations
                .iter()
                .zip(quantiles)
                .filter(|(y, q)| **y <= q[i])
                .count() as f64;
            let empirical = covered / n;
            CalibrationRow {
                alpha,
                empirical,
                deviation: empirical - alpha,
            }
        })
        .collect())
}

/// Mean width of the central interval between a symmetric quantile pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SharpnessRow {
    pub alpha_low: f64,
    pub alpha_high: f64,
    /// Nominal coverage of the interval.
    pub coverage: f64,
    pub mean_width: f64,
}

pub fn metric_sharpness(quantiles: &[Vec<f64>]) -> Result<Vec<SharpnessRow>, ForecastError> {
    if quantiles.is_empty() {
        return Err(ForecastError::EmptyInput);
    }
    let n = quantiles.len() as f64;
    let mut rows = Vec::new();
    for i in 0..MEDIAN_INDEX {
        let j = N_ALPHAS - 1 - i;
        let lo = ALPHA_GRID_PERMILLE[i] as f64 / 1000.0;
        let hi = ALPHA_GRID_PERMILLE[j] as f64 / 1000.0;
        let width = quantiles.iter().map(|q| q[j] - q[i]).sum::<f64>() / n;
        rows.push(SharpnessRow {
            alpha_low: lo,
            alpha_high: hi,
            coverage: hi - lo,
            mean_width: width,
        });
    }
    Ok(rows)
}

/// Skill per lead time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HorizonMetrics {
    pub horizon: usize,
    pub mae: f64,
    /// Absent for point-only families (persistence).
    pub crps: Option<f64>,
}

/// Full verification report for one family on one holdout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyEvaluation {
    pub family: super::Family,
    pub per_horizon: Vec<HorizonMetrics>,
    /// Pooled across horizons.
    pub calibration: Vec<CalibrationRow>,
    pub sharpness: Vec<SharpnessRow>,
    pub n_launches: usize,
}

impl FamilyEvaluation {
    pub fn mean_mae(&self) -> f64 {
        self.per_horizon.iter().map(|h| h.mae).sum::<f64>() / self.per_horizon.len() as f64
    }

    pub fn mean_mae_from(&self, min_horizon: usize) -> f64 {
        let tail: Vec<f64> = self
            .per_horizon
            .iter()
            .filter(|h| h.horizon >= min_horizon)
            .map(|h| h.mae)
            .collect();
        tail.iter().sum::<f64>() / tail.len() as f64
    }

    pub fn mean_crps(&self) -> Option<f64> {
        let values: Vec<f64> = self.per_horizon.iter().filter_map(|h| h.crps).collect();
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    }
}

/// Scores a fitted model set on every launch index in `launches` where the
/// full forecast/observation pair is available.
pub fn evaluate_model_set(
    set: &ForecastModelSet,
    series: &UniformSeries,
    launches: &[usize],
) -> Result<FamilyEvaluation, ForecastError> {
    let horizons = set.horizons;
    let mut obs_by_horizon: Vec<Vec<f64>> = vec![Vec::new(); horizons];
    let mut med_by_horizon: Vec<Vec<f64>> = vec![Vec::new(); horizons];
    let mut q_by_horizon: Vec<Vec<Vec<f64>>> = vec![Vec::new(); horizons];
    let mut pooled_obs: Vec<f64> = Vec::new();
    let mut pooled_q: Vec<Vec<f64>> = Vec::new();
    let mut n_launches = 0usize;

    for &t in launches {
        let Some(forecasts) = set.predict(series, t)? else {
            continue;
        };
        // require the full observation window so every horizon scores the
        // same launches
        let observations: Option<Vec<f64>> = (1..=horizons).map(|k| series.value(t + k)).collect();
        let Some(observations) = observations else {
            continue;
        };
        n_launches += 1;
        for (fc, y) in forecasts.iter().zip(&observations) {
            let k = fc.horizon - 1;
            obs_by_horizon[k].push(*y);
            med_by_horizon[k].push(fc.median());
            q_by_horizon[k].push(fc.values.clone());
            pooled_obs.push(*y);
            pooled_q.push(fc.values.clone());
        }
    }
    if n_launches == 0 {
        return Err(ForecastError::EmptyInput);
    }

    let point_only = matches!(set.family, super::Family::Persistence);
    let mut per_horizon = Vec::with_capacity(horizons);
    for k in 0..horizons {
        per_horizon.push(HorizonMetrics {
            horizon: k + 1,
            mae: metric_mae(&obs_by_horizon[k], &med_by_horizon[k])?,
            crps: if point_only {
                None
            } else {
                Some(metric_crps(&obs_by_horizon[k], &q_by_horizon[k])?)
            },
        });
    }

    Ok(FamilyEvaluation {
        family: set.family,
        per_horizon,
        calibration: metric_calibration(&pooled_obs, &pooled_q)?,
        sharpness: metric_sharpness(&pooled_q)?,
        n_launches,
    })
}

/// Forecast quantiles exported row-per-horizon for external plotting.
pub fn forecast_csv_rows(forecasts: &[QuantileForecast]) -> Vec<String> {
    forecasts
        .iter()
        .map(|f| {
            let mut row = format!("{},{}", f.issue_index, f.horizon);
            for v in &f.values {
                row.push_str(&format!(",{v:.3}"));
            }
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_forecast_scores_zero() {
        let obs = vec![5.0, 6.0, 7.0];
        let med = obs.clone();
        let quantiles: Vec<Vec<f64>> = obs.iter().map(|y| vec![*y; N_ALPHAS]).collect();
        assert_eq!(metric_mae(&obs, &med).unwrap(), 0.0);
        assert_eq!(metric_crps(&obs, &quantiles).unwrap(), 0.0);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(metric_mae(&[], &[]).is_err());
        assert!(metric_crps(&[], &[]).is_err());
        assert!(metric_calibration(&[], &[]).is_err());
        assert!(metric_sharpness(&[]).is_err());
    }

    #[test]
    fn crps_of_flat_quantiles_is_scaled_absolute_error() {
        // with every quantile at q, CRPS = 2·|y−q|·mean(pinball slopes) and
        // the mean of alpha over the symmetric grid is 1/2, so CRPS = |y−q|
        let obs = vec![10.0];
        let quantiles = vec![vec![8.0; N_ALPHAS]];
        let crps = metric_crps(&obs, &quantiles).unwrap();
        assert!((crps - 2.0 * 0.5 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn calibration_against_known_gaussian() {
        // Monte-Carlo oracle: samples from N(0,1), forecasts are its true
        // quantiles; empirical coverage must match each nominal level
        // within 3 points at n = 1000.
        use rand::Rng;
        let mut rng = crate::seeds::rng_for(7, "calibration-oracle");
        let n = 1000;
        // true standard normal quantiles for the grid via inverse erf
        // (Acklam-style rational approximation is overkill; use bisection
        // on Phi)
        let phi = |x: f64| 0.5 * (1.0 + erf_approx(x / std::f64::consts::SQRT_2));
        let inv_phi = |p: f64| {
            let (mut lo, mut hi) = (-8.0, 8.0);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if phi(mid) < p {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let true_quantiles: Vec<f64> = ALPHA_GRID_PERMILLE
            .iter()
            .map(|p| inv_phi(*p as f64 / 1000.0))
            .collect();
        let observations: Vec<f64> = (0..n)
            .map(|_| {
                // Box-Muller
                let u1: f64 = rng.gen_range(1e-12..1.0);
                let u2: f64 = rng.gen();
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect();
        let quantiles: Vec<Vec<f64>> = (0..n).map(|_| true_quantiles.clone()).collect();
        for row in metric_calibration(&observations, &quantiles).unwrap() {
            assert!(
                row.deviation.abs() < 0.03,
                "alpha {} deviates {}",
                row.alpha,
                row.deviation
            );
        }
    }

    // Abramowitz–Stegun 7.1.26
    fn erf_approx(x: f64) -> f64 {
        let sign = if x < 0.0 { -1.0 } else { 1.0 };
        let x = x.abs();
        let t = 1.0 / (1.0 + 0.3275911 * x);
        let y = 1.0
            - (((((1.061405429 * t - 1.453152027) * t) + 1.421413741) * t - 0.284496736) * t
                + 0.254829592)
                * t
                * (-x * x).exp();
        sign * y
    }

    #[test]
    fn sharpness_pairs_are_symmetric() {
        let quantiles = vec![ALPHA_GRID_PERMILLE
            .iter()
            .map(|p| *p as f64)
            .collect::<Vec<f64>>()];
        let rows = metric_sharpness(&quantiles).unwrap();
        assert_eq!(rows.len(), MEDIAN_INDEX);
        assert!((rows[0].coverage - 0.9).abs() < 1e-12);
        assert!((rows[0].mean_width - 900.0).abs() < 1e-12);
        assert!((rows[8].coverage - 0.1).abs() < 1e-12);
    }
}

//! Quantile (pinball) loss.

/// Asymmetric loss whose minimizer is the `alpha`-quantile:
/// `alpha·(y − q)` when the observation lies above the forecast quantile,
/// `(alpha − 1)·(y − q)` otherwise. Nonnegative, zero only when `y == q`.
pub fn pinball_loss(y: f64, q: f64, alpha: f64) -> f64 {
    let diff = y - q;
    if diff >= 0.0 {
        alpha * diff
    } else {
        (alpha - 1.0) * diff
    }
}

/// Mean pinball loss over aligned observations and quantile forecasts.
pub fn mean_pinball(observations: &[f64], forecasts: &[f64], alpha: f64) -> f64 {
    debug_assert_eq!(observations.len(), forecasts.len());
    let n = observations.len().max(1);
    observations
        .iter()
        .zip(forecasts)
        .map(|(y, q)| pinball_loss(*y, *q, alpha))
        .sum::<f64>()
        / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        // y=10, q=8, alpha=0.5 -> 0.5 * 2 = 1.0
        assert_eq!(pinball_loss(10.0, 8.0, 0.5), 1.0);
    }

    #[test]
    fn zero_iff_exact() {
        assert_eq!(pinball_loss(5.0, 5.0, 0.3), 0.0);
        for (y, q) in [(5.0, 4.0), (4.0, 5.0)] {
            for alpha in [0.05, 0.5, 0.95] {
                assert!(pinball_loss(y, q, alpha) > 0.0);
            }
        }
    }

    #[test]
    fn asymmetry_matches_alpha() {
        // under-forecasting is punished `alpha` per unit, over-forecasting
        // `1 - alpha` per unit
        let alpha = 0.8;
        assert!((pinball_loss(11.0, 10.0, alpha) - alpha).abs() < 1e-12);
        assert!((pinball_loss(9.0, 10.0, alpha) - (1.0 - alpha)).abs() < 1e-12);
    }
}

//! Difference features derived from consecutive samples.

use super::FeatureError;

/// Denominator floor of the growth-or-decay ratio [m³/h]. Keeps the ratio
/// finite when the current sample is zero.
pub const GOD_EPSILON_M3H: f64 = 1.0;

/// Change over time between consecutive samples:
/// `(W_prev − W_curr) / (t_prev − t_curr)` in (m³/h) per minute. With time
/// running forward the denominator is `−dt`, so a rising series yields a
/// negative value.
pub fn change_over_time(w_prev: f64, w_curr: f64, dt_minutes: f64) -> Result<f64, FeatureError> {
    if dt_minutes == 0.0 {
        return Err(FeatureError::ZeroTimeDelta);
    }
    Ok((w_prev - w_curr) / (-dt_minutes))
}

/// Growth-or-decay ratio `(W_prev − W_curr) / W_curr`, with the denominator
/// floored at [`GOD_EPSILON_M3H`].
pub fn growth_or_decay(w_prev: f64, w_curr: f64) -> f64 {
    (w_prev - w_curr) / w_curr.max(GOD_EPSILON_M3H)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cot_formula() {
        // (100 - 80) / (-2) = -10
        assert_eq!(change_over_time(100.0, 80.0, 2.0).unwrap(), -10.0);
        assert_eq!(change_over_time(80.0, 100.0, 2.0).unwrap(), 10.0);
        assert_eq!(change_over_time(50.0, 50.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn cot_zero_dt_is_domain_error() {
        assert!(matches!(
            change_over_time(1.0, 2.0, 0.0),
            Err(FeatureError::ZeroTimeDelta)
        ));
    }

    #[test]
    fn god_formula() {
        assert_eq!(growth_or_decay(100.0, 80.0), 0.25);
        assert_eq!(growth_or_decay(80.0, 80.0), 0.0);
        // epsilon floor when the current sample is zero
        assert_eq!(growth_or_decay(10.0, 0.0), 10.0 / GOD_EPSILON_M3H);
    }
}

//! Reward shaping for the control policy.

use serde::{Deserialize, Serialize};

/// Weights and constants of the two-term reward.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    /// Weight on the level term.
    pub c1: f64,
    /// Weight on the power term.
    pub c2: f64,
    /// Level reward inside the admissible band.
    pub r_plus: f64,
    /// Level penalty outside it.
    pub r_minus: f64,
    /// Admissible band [m], inclusive on both ends.
    pub band_low_m: f64,
    pub band_high_m: f64,
    /// Divisor applied before the agent sees the reward.
    pub scale: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 0.4,
            r_plus: 3.0,
            r_minus: -600.0,
            band_low_m: 3.0,
            band_high_m: 7.2,
            scale: 600.0,
        }
    }
}

/// Decomposed reward for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardParts {
    /// Level term before weighting.
    pub level_term: f64,
    /// Power term before weighting; a consumption penalty, so nonpositive.
    pub power_term: f64,
    pub raw: f64,
    pub scaled: f64,
}

/// Two-term reward: a band reward on the tank level plus a penalty
/// proportional to the drawn share of the installed capacity. The power
/// term enters negatively; paying the agent to consume energy would
/// contradict the optimization goal.
pub fn reward(
    level_m: f64,
    total_power_kw: f64,
    installed_kw: f64,
    rc: &RewardConfig,
) -> RewardParts {
    let level_term = if (rc.band_low_m..=rc.band_high_m).contains(&level_m) {
        rc.r_plus
    } else {
        rc.r_minus
    };
    let power_term = -(total_power_kw / installed_kw);
    let raw = rc.c1 * level_term + rc.c2 * power_term;
    RewardParts {
        level_term,
        power_term,
        raw,
        scaled: raw / rc.scale,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const INSTALLED: f64 = 550.0;

    #[test]
    fn in_band_idle_station() {
        let parts = reward(6.0, 0.0, INSTALLED, &RewardConfig::default());
        assert_eq!(parts.raw, 3.0);
        assert_eq!(parts.scaled, 3.0 / 600.0);
    }

    #[test]
    fn above_band_is_penalized() {
        let parts = reward(7.5, 0.0, INSTALLED, &RewardConfig::default());
        assert_eq!(parts.raw, -600.0);
    }

    #[test]
    fn full_power_costs_c2() {
        let parts = reward(6.0, INSTALLED, INSTALLED, &RewardConfig::default());
        assert!((parts.raw - 2.6).abs() < 1e-12);
        assert_eq!(parts.power_term, -1.0);
    }

    #[test]
    fn band_is_inclusive() {
        let rc = RewardConfig::default();
        assert_eq!(reward(3.0, 0.0, INSTALLED, &rc).level_term, 3.0);
        assert_eq!(reward(7.2, 0.0, INSTALLED, &rc).level_term, 3.0);
        assert_eq!(reward(2.999, 0.0, INSTALLED, &rc).level_term, -600.0);
        assert_eq!(reward(7.201, 0.0, INSTALLED, &rc).level_term, -600.0);
    }

    #[test]
    fn raw_reward_is_bounded() {
        let rc = RewardConfig::default();
        let lower = rc.c1 * rc.r_minus + rc.c2 * (-1.0);
        let upper = rc.c1 * rc.r_plus;
        for level in [0.0, 2.9, 3.0, 5.0, 7.2, 7.3, 8.0] {
            for power in [0.0, 100.0, 550.0] {
                let parts = reward(level, power, INSTALLED, &rc);
                assert!(parts.raw >= lower - 1e-12 && parts.raw <= upper + 1e-12);
            }
        }
    }
}

//! The current operating rules: fixed 6 m set-point with pump sequencing.
//!
//! Start sequence: the first drive-controlled pump starts when the level
//! passes the set-point; the next one starts only when every running drive
//! has reached the rated 50 Hz; candidates are picked longest-stopped
//! first. With `k` drive pumps running, the earliest-started `k−2` hold
//! 50 Hz while the last two modulate proportionally to the level error.
//! The fifth unit runs through a soft starter at fixed speed and is only
//! brought in when three drive pumps are already at rated speed.
//!
//! Stop sequence: below the set-point the modulating pumps ramp down; once
//! they reach the minimum operating frequency the longest-running pump is
//! stopped. The soft-starter unit drops out as soon as fewer than three
//! drive pumps are required. Frequencies move under a slew limit, which is
//! what gives the rules their reaction lag during sharp intake rises.

use super::config::{PlantConfig, N_PUMPS};
use super::sim::Controller;

/// Index of the fixed-speed (soft starter) unit.
const FIXED_PUMP: usize = N_PUMPS - 1;
/// Rated drive frequency [Hz].
const RATED_HZ: f64 = 50.0;
/// Tolerance for "reached rated/minimum speed" checks [Hz].
const FREQ_EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct BaselineController {
    cfg: PlantConfig,
    freq_hz: [f64; N_PUMPS],
    running: [bool; N_PUMPS],
    /// Monotone counter stamped on each start, ordering the sequence.
    start_stamp: [u64; N_PUMPS],
    /// Stamp of the most recent stop; pre-seeded so that the initial
    /// longest-stopped order is pump 1, 2, 3, 4.
    stop_stamp: [u64; N_PUMPS],
    next_stamp: u64,
}

impl BaselineController {
    pub fn new(cfg: PlantConfig) -> Self {
        let mut ctl = Self {
            cfg,
            freq_hz: [0.0; N_PUMPS],
            running: [false; N_PUMPS],
            start_stamp: [0; N_PUMPS],
            stop_stamp: [0; N_PUMPS],
            next_stamp: N_PUMPS as u64,
        };
        ctl.reset();
        ctl
    }

    fn drive_pumps() -> impl Iterator<Item = usize> {
        (0..N_PUMPS).filter(|i| *i != FIXED_PUMP)
    }

    fn running_drives(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = Self::drive_pumps().filter(|&i| self.running[i]).collect();
        ids.sort_by_key(|&i| self.start_stamp[i]);
        ids
    }

    /// Longest-stopped available drive pump, if any.
    fn next_start_candidate(&self, online: &[bool; N_PUMPS]) -> Option<usize> {
        Self::drive_pumps()
            .filter(|&i| !self.running[i] && online[i])
            .min_by_key(|&i| self.stop_stamp[i])
    }

    fn start(&mut self, pump: usize) {
        self.running[pump] = true;
        self.freq_hz[pump] = if pump == FIXED_PUMP {
            RATED_HZ
        } else {
            self.cfg.baseline_min_freq_hz
        };
        self.start_stamp[pump] = self.next_stamp;
        self.next_stamp += 1;
    }

    fn stop(&mut self, pump: usize) {
        self.running[pump] = false;
        self.freq_hz[pump] = 0.0;
        self.stop_stamp[pump] = self.next_stamp;
        self.next_stamp += 1;
    }

    fn power_from_freq(&self, freq_hz: f64) -> f64 {
        self.cfg.rated_power_kw * (freq_hz / RATED_HZ).powi(3)
    }
}

impl Controller for BaselineController {
    fn reset(&mut self) {
        self.freq_hz = [0.0; N_PUMPS];
        self.running = [false; N_PUMPS];
        self.start_stamp = [0; N_PUMPS];
        for (i, stamp) in self.stop_stamp.iter_mut().enumerate() {
            *stamp = i as u64;
        }
        self.next_stamp = N_PUMPS as u64;
    }

    fn set_points(&mut self, level_m: f64, online: &[bool; N_PUMPS]) -> [f64; N_PUMPS] {
        let cfg = self.cfg.clone();
        let error = level_m - cfg.setpoint_m;

        // Forced stops: units that went into maintenance.
        for i in 0..N_PUMPS {
            if self.running[i] && !online[i] {
                self.stop(i);
            }
        }

        let drives = self.running_drives();
        let all_at_rated = !drives.is_empty()
            && drives
                .iter()
                .all(|&i| self.freq_hz[i] >= RATED_HZ - FREQ_EPS);

        if error > 0.0 {
            // Start at most one unit per step.
            if drives.is_empty() {
                if let Some(p) = self.next_start_candidate(online) {
                    self.start(p);
                }
            } else if all_at_rated {
                let n = drives.len();
                if n < 3 {
                    if let Some(p) = self.next_start_candidate(online) {
                        self.start(p);
                    }
                } else if !self.running[FIXED_PUMP] && online[FIXED_PUMP] {
                    self.start(FIXED_PUMP);
                } else if let Some(p) = self.next_start_candidate(online) {
                    self.start(p);
                }
            }
        }

        // Frequency targets: earliest k-2 hold rated speed, last two modulate.
        let drives = self.running_drives();
        let k = drives.len();
        let modulating_from = k.saturating_sub(2);
        let fraction = (error / cfg.baseline_band_m).clamp(0.0, 1.0);
        let modulated_target = if error >= 0.0 {
            cfg.baseline_min_freq_hz + (RATED_HZ - cfg.baseline_min_freq_hz) * fraction
        } else {
            cfg.baseline_min_freq_hz
        };
        for (pos, &i) in drives.iter().enumerate() {
            let target = if pos < modulating_from {
                RATED_HZ
            } else {
                modulated_target
            };
            let step = (target - self.freq_hz[i]).clamp(-cfg.baseline_slew_hz, cfg.baseline_slew_hz);
            self.freq_hz[i] =
                (self.freq_hz[i] + step).clamp(cfg.baseline_min_freq_hz, RATED_HZ);
        }

        // Stop sequence below the set-point.
        if error < 0.0 && k > 0 {
            let modulating = &drives[modulating_from..];
            let all_at_min = modulating
                .iter()
                .all(|&i| self.freq_hz[i] <= cfg.baseline_min_freq_hz + FREQ_EPS);
            if all_at_min {
                // the pump running longest = smallest start stamp
                let longest = drives[0];
                self.stop(longest);
            }
        }

        // Soft-starter unit drops out when fewer than three drives run.
        if self.running[FIXED_PUMP] && self.running_drives().len() < 3 {
            self.stop(FIXED_PUMP);
        }

        let mut powers = [0.0; N_PUMPS];
        for i in Self::drive_pumps() {
            if self.running[i] {
                powers[i] = self.power_from_freq(self.freq_hz[i]);
            }
        }
        if self.running[FIXED_PUMP] {
            powers[FIXED_PUMP] = cfg.rated_power_kw;
        }
        powers
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_online() -> [bool; N_PUMPS] {
        [true; N_PUMPS]
    }

    #[test]
    fn first_pump_starts_on_rising_level() {
        let mut ctl = BaselineController::new(PlantConfig::default());
        let powers = ctl.set_points(6.5, &all_online());
        let active: Vec<usize> = (0..N_PUMPS).filter(|&i| powers[i] > 0.0).collect();
        assert_eq!(active, vec![0], "exactly pump 1 starts");
    }

    #[test]
    fn sustained_low_level_stops_everything() {
        let mut ctl = BaselineController::new(PlantConfig::default());
        for _ in 0..60 {
            ctl.set_points(7.5, &all_online());
        }
        assert!(ctl.running.iter().any(|r| *r));
        let mut last = [0.0; N_PUMPS];
        for _ in 0..200 {
            last = ctl.set_points(5.0, &all_online());
        }
        assert!(last.iter().all(|p| *p == 0.0), "pumps still running: {last:?}");
    }

    #[test]
    fn pinned_high_level_brings_in_at_least_four_pumps() {
        let mut ctl = BaselineController::new(PlantConfig::default());
        let mut max_active = 0;
        for _ in 0..200 {
            let powers = ctl.set_points(8.0, &all_online());
            max_active = max_active.max(powers.iter().filter(|p| **p > 0.0).count());
        }
        assert!(max_active >= 4, "only {max_active} pumps came online");
    }

    #[test]
    fn fixed_pump_runs_at_rated_power_only() {
        let cfg = PlantConfig::default();
        let mut ctl = BaselineController::new(cfg.clone());
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..300 {
            let p = ctl.set_points(8.0, &all_online())[FIXED_PUMP];
            seen.insert((p * 1000.0) as i64);
        }
        for _ in 0..300 {
            let p = ctl.set_points(5.0, &all_online())[FIXED_PUMP];
            seen.insert((p * 1000.0) as i64);
        }
        for v in seen {
            assert!(v == 0 || v == (cfg.rated_power_kw * 1000.0) as i64);
        }
    }

    #[test]
    fn offline_pumps_are_never_commanded() {
        let mut ctl = BaselineController::new(PlantConfig::default());
        let mut online = all_online();
        online[0] = false;
        online[2] = false;
        for _ in 0..100 {
            let powers = ctl.set_points(8.0, &online);
            assert_eq!(powers[0], 0.0);
            assert_eq!(powers[2], 0.0);
        }
    }

    #[test]
    fn start_order_is_longest_stopped_first() {
        let mut ctl = BaselineController::new(PlantConfig::default());
        // bring up three drives, then shed all of them
        for _ in 0..120 {
            ctl.set_points(7.9, &all_online());
        }
        for _ in 0..400 {
            ctl.set_points(4.0, &all_online());
        }
        // pump stopped first is the one started first: pump 0
        let first_stopped = (0..4).min_by_key(|&i| ctl.stop_stamp[i]).unwrap();
        let powers = ctl.set_points(6.3, &all_online());
        let started: Vec<usize> = (0..4).filter(|&i| powers[i] > 0.0).collect();
        assert_eq!(started, vec![first_stopped]);
    }
}

//! Training-data cleaning for the emulator models.
//!
//! Records taken while the level was above the first alarm are excluded
//! (the bypass falsifies the outflow reading), and the remainder is
//! averaged into 4-minute windows, halving the nominal 2-minute resolution
//! and smoothing noisy readings.

use crate::plant::{PlantConfig, RawRecord, N_PUMPS};
use chrono::Duration;

pub const CLEAN_WINDOW_MINUTES: i64 = 4;

pub fn clean_training_records(records: &[RawRecord], cfg: &PlantConfig) -> Vec<RawRecord> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    let anchor = first.timestamp;

    let mut out: Vec<RawRecord> = Vec::new();
    let mut window: i64 = -1;
    let mut bucket: Vec<&RawRecord> = Vec::new();

    let flush = |bucket: &mut Vec<&RawRecord>, window: i64, out: &mut Vec<RawRecord>| {
        if bucket.is_empty() {
            return;
        }
        let n = bucket.len() as f64;
        let mut avg = RawRecord {
            timestamp: anchor + Duration::minutes(window * CLEAN_WINDOW_MINUTES),
            intake_m3h: bucket.iter().map(|r| r.intake_m3h).sum::<f64>() / n,
            outflow_m3h: bucket.iter().map(|r| r.outflow_m3h).sum::<f64>() / n,
            level_m: bucket.iter().map(|r| r.level_m).sum::<f64>() / n,
            pump_power_kw: [0.0; N_PUMPS],
            pump_freq_hz: [0.0; N_PUMPS],
            pump_online: [false; N_PUMPS],
        };
        for i in 0..N_PUMPS {
            avg.pump_power_kw[i] = bucket.iter().map(|r| r.pump_power_kw[i]).sum::<f64>() / n;
            avg.pump_freq_hz[i] = bucket.iter().map(|r| r.pump_freq_hz[i]).sum::<f64>() / n;
            let online_votes = bucket.iter().filter(|r| r.pump_online[i]).count();
            avg.pump_online[i] = avg.pump_power_kw[i] > 0.0 || 2 * online_votes >= bucket.len();
        }
        out.push(avg);
        bucket.clear();
    };

    for record in records {
        if record.level_m > cfg.alarm_level_m {
            continue;
        }
        let w = (record.timestamp - anchor).num_minutes() / CLEAN_WINDOW_MINUTES;
        if w != window {
            flush(&mut bucket, window, &mut out);
            window = w;
        }
        bucket.push(record);
    }
    flush(&mut bucket, window, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDateTime;

    fn record(minute: i64, level: f64, intake: f64) -> RawRecord {
        RawRecord {
            timestamp: NaiveDateTime::parse_from_str("2016-01-01T00:00:00", "%Y-%m-%dT%H:%M:%S")
                .unwrap()
                + Duration::minutes(minute),
            intake_m3h: intake,
            outflow_m3h: intake / 2.0,
            level_m: level,
            pump_power_kw: [10.0, 0.0, 0.0, 0.0, 0.0],
            pump_freq_hz: [30.0, 0.0, 0.0, 0.0, 0.0],
            pump_online: [true; N_PUMPS],
        }
    }

    #[test]
    fn contaminated_records_are_excluded() {
        let cfg = PlantConfig::default();
        let records = vec![
            record(0, 6.0, 100.0),
            record(2, 7.5, 200.0),
            record(4, 6.1, 300.0),
        ];
        let cleaned = clean_training_records(&records, &cfg);
        // the 7.5 m record is gone entirely; it neither appears nor
        // contaminates a window average
        assert_eq!(cleaned.len(), 2);
        assert_eq!(cleaned[0].intake_m3h, 100.0);
        assert_eq!(cleaned[1].intake_m3h, 300.0);
    }

    #[test]
    fn two_fine_grained_rows_average_into_one_window() {
        let cfg = PlantConfig::default();
        let records = vec![record(0, 6.0, 100.0), record(2, 6.2, 200.0)];
        let cleaned = clean_training_records(&records, &cfg);
        assert_eq!(cleaned.len(), 1);
        assert_eq!(cleaned[0].intake_m3h, 150.0);
        assert!((cleaned[0].level_m - 6.1).abs() < 1e-12);
        assert_eq!(cleaned[0].timestamp, records[0].timestamp);
    }

    #[test]
    fn clean_input_is_only_resampled() {
        let cfg = PlantConfig::default();
        let records: Vec<RawRecord> = (0..20).map(|i| record(2 * i, 6.0, 100.0)).collect();
        let cleaned = clean_training_records(&records, &cfg);
        assert_eq!(cleaned.len(), 10);
        for (i, r) in cleaned.iter().enumerate() {
            assert_eq!(
                r.timestamp,
                records[0].timestamp + Duration::minutes(4 * i as i64)
            );
            assert_eq!(r.intake_m3h, 100.0);
        }
    }

    #[test]
    fn empty_input_is_empty() {
        let cfg = PlantConfig::default();
        assert!(clean_training_records(&[], &cfg).is_empty());
    }
}

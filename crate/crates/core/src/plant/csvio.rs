//! Dataset CSV serialization.
//!
//! Schema: `timestamp,intake_m3h,outflow_m3h,level_m,p1_kw..p5_kw,
//! f1_hz..f5_hz,on1..on5`, ISO-8601 timestamps, decimal point. Flows,
//! powers and frequencies are quantized to six decimals and written at
//! that precision; the level is written with the shortest representation
//! that round-trips the exact f64, because the mass balance has to close
//! from the recorded values. Either way a write/read round trip is an
//! identity.

use super::config::N_PUMPS;
use super::types::RawRecord;
use super::PlantError;
use chrono::NaiveDateTime;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

const TS_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

pub fn csv_header() -> String {
    let mut cols = vec![
        "timestamp".to_string(),
        "intake_m3h".to_string(),
        "outflow_m3h".to_string(),
        "level_m".to_string(),
    ];
    cols.extend((1..=N_PUMPS).map(|i| format!("p{i}_kw")));
    cols.extend((1..=N_PUMPS).map(|i| format!("f{i}_hz")));
    cols.extend((1..=N_PUMPS).map(|i| format!("on{i}")));
    cols.join(",")
}

pub fn write_csv(records: &[RawRecord], path: &Path) -> Result<(), PlantError> {
    let file = File::create(path).map_err(|e| PlantError::Io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e: std::io::Error| PlantError::Io(path.display().to_string(), e);
    writeln!(w, "{}", csv_header()).map_err(io_err)?;
    for r in records {
        let mut row = format!(
            "{},{:.6},{:.6},{}",
            r.timestamp.format(TS_FORMAT),
            r.intake_m3h,
            r.outflow_m3h,
            r.level_m
        );
        for p in &r.pump_power_kw {
            row.push_str(&format!(",{p:.6}"));
        }
        for f in &r.pump_freq_hz {
            row.push_str(&format!(",{f:.6}"));
        }
        for on in &r.pump_online {
            row.push_str(if *on { ",1" } else { ",0" });
        }
        writeln!(w, "{row}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

fn parse_f64(field: &str, name: &str, line: usize) -> Result<f64, PlantError> {
    field.parse::<f64>().map_err(|_| PlantError::Parse {
        line,
        message: format!("bad {name} value {field:?}"),
    })
}

pub fn read_csv(path: &Path) -> Result<Vec<RawRecord>, PlantError> {
    let file = File::open(path).map_err(|e| PlantError::Io(path.display().to_string(), e))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let expected_header = csv_header();
    let mut prev_ts: Option<NaiveDateTime> = None;

    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| PlantError::Io(path.display().to_string(), e))?;
        let line_no = idx + 1;
        if idx == 0 {
            if line.trim() != expected_header {
                return Err(PlantError::Parse {
                    line: line_no,
                    message: format!("unexpected header {line:?}"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let expected = 4 + 3 * N_PUMPS;
        if fields.len() != expected {
            return Err(PlantError::Parse {
                line: line_no,
                message: format!("expected {expected} fields, found {}", fields.len()),
            });
        }
        let timestamp =
            NaiveDateTime::parse_from_str(fields[0], TS_FORMAT).map_err(|e| PlantError::Parse {
                line: line_no,
                message: format!("bad timestamp {:?}: {e}", fields[0]),
            })?;
        let mut record = RawRecord {
            timestamp,
            intake_m3h: parse_f64(fields[1], "intake", line_no)?,
            outflow_m3h: parse_f64(fields[2], "outflow", line_no)?,
            level_m: parse_f64(fields[3], "level", line_no)?,
            pump_power_kw: [0.0; N_PUMPS],
            pump_freq_hz: [0.0; N_PUMPS],
            pump_online: [false; N_PUMPS],
        };
        for i in 0..N_PUMPS {
            record.pump_power_kw[i] = parse_f64(fields[4 + i], "power", line_no)?;
            record.pump_freq_hz[i] = parse_f64(fields[4 + N_PUMPS + i], "frequency", line_no)?;
            record.pump_online[i] = match fields[4 + 2 * N_PUMPS + i] {
                "1" => true,
                "0" => false,
                other => {
                    return Err(PlantError::Parse {
                        line: line_no,
                        message: format!("bad online flag {other:?}"),
                    })
                }
            };
        }
        record.check().map_err(|e| PlantError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if let Some(prev) = prev_ts {
            if record.timestamp <= prev {
                return Err(PlantError::Parse {
                    line: line_no,
                    message: format!("timestamp {} not increasing", record.timestamp),
                });
            }
        }
        prev_ts = Some(record.timestamp);
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::config::PlantConfig;
    use crate::plant::intake::generate_intake;
    use crate::plant::irregular::irregularize;
    use crate::plant::sim::{simulate_plant, Controller};
    use std::fs;

    struct Half;
    impl Controller for Half {
        fn set_points(&mut self, _l: f64, _o: &[bool; N_PUMPS]) -> [f64; N_PUMPS] {
            [55.0; N_PUMPS]
        }
        fn reset(&mut self) {}
    }

    #[test]
    fn round_trip_identity() {
        let cfg = PlantConfig::default();
        let series = generate_intake(&cfg, 1).unwrap();
        let records = simulate_plant(&series, &mut Half, &cfg).unwrap().records;
        let records = irregularize(&records, &cfg);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        write_csv(&records, &path).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn rewrite_is_bitwise_identical() {
        let cfg = PlantConfig::default();
        let series = generate_intake(&cfg, 1).unwrap();
        let records = simulate_plant(&series, &mut Half, &cfg).unwrap().records;
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.csv");
        let p2 = dir.path().join("b.csv");
        write_csv(&records, &p1).unwrap();
        let back = read_csv(&p1).unwrap();
        write_csv(&back, &p2).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
    }

    #[test]
    fn negative_level_is_parse_error_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let row = format!(
            "2016-01-01T00:00:00,1.0,1.0,-0.5{}{}{}",
            ",0.0".repeat(N_PUMPS),
            ",0.0".repeat(N_PUMPS),
            ",0".repeat(N_PUMPS)
        );
        fs::write(&path, format!("{}\n{row}\n", csv_header())).unwrap();
        match read_csv(&path) {
            Err(PlantError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn header_only_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        fs::write(&path, format!("{}\n", csv_header())).unwrap();
        assert!(read_csv(&path).unwrap().is_empty());
    }
}

//! SPC process-data CSV (chiller plant, one row per 5 minutes).

use std::io::{Read, Write};
use std::path::Path;

use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use super::time::{format_timestamp, parse_timestamp};
use crate::error::{Error, Result};
use crate::types::Timestamp;

pub const TIMESTAMP_COLUMN: &str = "Timestamp";

pub const MEASUREMENT_COLUMNS: [&str; 7] = [
    "Air Pressure 1",
    "Air Pressure 2",
    "Chiller 1 Supply Tmp",
    "Chiller 2 Supply Tmp",
    "Outside Air Temp",
    "Outside Humidity",
    "Outside Dewpoint",
];

/// Nominal spacing between SPC samples.
pub const PROCESS_INTERVAL_S: f64 = 300.0;

/// One SPC sample. Temperatures in °F.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessRow {
    pub timestamp: Timestamp,
    pub air_pressure_1: f64,
    pub air_pressure_2: f64,
    pub chiller1_supply_tmp: f64,
    pub chiller2_supply_tmp: f64,
    pub outside_air_temp: f64,
    pub outside_humidity: f64,
    pub outside_dewpoint: f64,
}

impl ProcessRow {
    /// Measurement values in [`MEASUREMENT_COLUMNS`] order.
    pub fn measurements(&self) -> [f64; 7] {
        [
            self.air_pressure_1,
            self.air_pressure_2,
            self.chiller1_supply_tmp,
            self.chiller2_supply_tmp,
            self.outside_air_temp,
            self.outside_humidity,
            self.outside_dewpoint,
        ]
    }

    fn from_measurements(timestamp: Timestamp, m: [f64; 7]) -> Self {
        ProcessRow {
            timestamp,
            air_pressure_1: m[0],
            air_pressure_2: m[1],
            chiller1_supply_tmp: m[2],
            chiller2_supply_tmp: m[3],
            outside_air_temp: m[4],
            outside_humidity: m[5],
            outside_dewpoint: m[6],
        }
    }
}

pub fn parse_process_csv(path: &Path, tz: Tz) -> Result<Vec<ProcessRow>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_process_reader(file, &path.display().to_string(), tz)
}

/// Parses rows and returns them in ascending timestamp order.
pub fn parse_process_reader<R: Read>(reader: R, source: &str, tz: Tz) -> Result<Vec<ProcessRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(source, 1, e.to_string()))?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}') == name)
            .ok_or_else(|| Error::Data(format!("{source}: missing column '{name}'")))
    };
    let ts_col = find(TIMESTAMP_COLUMN)?;
    let cols = MEASUREMENT_COLUMNS
        .iter()
        .map(|name| find(name))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::parse(source, line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let ts_text = rec.get(ts_col).unwrap_or("");
        let timestamp = parse_timestamp(ts_text, tz)
            .ok_or_else(|| Error::parse(source, line, format!("unparseable timestamp '{ts_text}'")))?;
        let mut m = [0.0; 7];
        for (k, &c) in cols.iter().enumerate() {
            let field = rec.get(c).unwrap_or("");
            m[k] = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    Error::parse(
                        source,
                        line,
                        format!("column '{}': bad value '{field}'", MEASUREMENT_COLUMNS[k]),
                    )
                })?;
        }
        rows.push(ProcessRow::from_measurements(timestamp, m));
    }
    rows.sort_by(|a, b| a.timestamp.0.total_cmp(&b.timestamp.0));
    Ok(rows)
}

pub fn write_process_csv<W: Write>(rows: &[ProcessRow], tz: Tz, mut out: W) -> std::io::Result<()> {
    write!(out, "{TIMESTAMP_COLUMN}")?;
    for c in MEASUREMENT_COLUMNS {
        write!(out, ",{c}")?;
    }
    writeln!(out)?;
    for r in rows {
        write!(out, "{}", format_timestamp(r.timestamp, tz))?;
        for v in r.measurements() {
            write!(out, ",{v:?}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Summary of the spacing between consecutive rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cadence {
    pub median_interval_s: f64,
    /// Consecutive pairs more than 1.5× the nominal interval apart.
    pub gaps: usize,
    pub conforming: bool,
}

pub fn check_cadence(rows: &[ProcessRow]) -> Option<Cadence> {
    if rows.len() < 2 {
        return None;
    }
    let mut deltas: Vec<f64> = rows
        .windows(2)
        .map(|w| w[1].timestamp.0 - w[0].timestamp.0)
        .collect();
    let gaps = deltas.iter().filter(|&&d| d > 1.5 * PROCESS_INTERVAL_S).count();
    deltas.sort_by(f64::total_cmp);
    let median = deltas[deltas.len() / 2];
    Some(Cadence {
        median_interval_s: median,
        gaps,
        conforming: (median - PROCESS_INTERVAL_S).abs() <= 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::time::DEFAULT_TZ;

    const HEADER: &str = "Timestamp,Air Pressure 1,Air Pressure 2,Chiller 1 Supply Tmp,Chiller 2 Supply Tmp,Outside Air Temp,Outside Humidity,Outside Dewpoint";

    #[test]
    fn five_minute_rows() {
        let text = format!("{HEADER}\n7/27/2021 0:00,90,91,53.1,52.9,75,60,58\n7/27/2021 0:05,90,91,53.0,53.2,75,61,58\n");
        let rows = parse_process_reader(text.as_bytes(), "p.csv", DEFAULT_TZ).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].chiller1_supply_tmp, 53.1);
        let c = check_cadence(&rows).unwrap();
        assert_eq!(c.median_interval_s, 300.0);
        assert!(c.conforming);
        assert_eq!(c.gaps, 0);
    }

    #[test]
    fn output_is_sorted() {
        let text = format!("{HEADER}\n7/27/2021 0:10,1,1,1,1,1,1,1\n7/27/2021 0:00,2,2,2,2,2,2,2\n7/27/2021 0:05,3,3,3,3,3,3,3\n");
        let rows = parse_process_reader(text.as_bytes(), "p.csv", DEFAULT_TZ).unwrap();
        let order: Vec<f64> = rows.iter().map(|r| r.air_pressure_1).collect();
        assert_eq!(order, vec![2.0, 3.0, 1.0]);
    }

    #[test]
    fn missing_column_is_named() {
        let header = HEADER.replace(",Chiller 1 Supply Tmp", "");
        let text = format!("{header}\n7/27/2021 0:00,1,1,1,1,1,1\n");
        let err = parse_process_reader(text.as_bytes(), "p.csv", DEFAULT_TZ).unwrap_err();
        assert!(err.to_string().contains("'Chiller 1 Supply Tmp'"), "{err}");
    }

    #[test]
    fn bad_timestamp_reports_line() {
        let text = format!("{HEADER}\n7/27/2021 0:00,1,1,1,1,1,1,1\nnot-a-time,1,1,1,1,1,1,1\n");
        let err = parse_process_reader(text.as_bytes(), "p.csv", DEFAULT_TZ).unwrap_err();
        assert!(err.to_string().starts_with("p.csv:3:"), "{err}");
    }

    #[test]
    fn write_then_parse() {
        let text = format!("{HEADER}\n7/27/2021 0:00,90.5,91,53.1,52.9,75,60,58\n");
        let rows = parse_process_reader(text.as_bytes(), "p.csv", DEFAULT_TZ).unwrap();
        let mut buf = Vec::new();
        write_process_csv(&rows, DEFAULT_TZ, &mut buf).unwrap();
        let back = parse_process_reader(buf.as_slice(), "p.csv", DEFAULT_TZ).unwrap();
        assert_eq!(back, rows);
    }
}

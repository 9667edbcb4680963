//! Pharmaceutical packaging line vibration text files.
//!
//! Each record is five lines: a datetime, the x, y and z axes (3200 numbers
//! each, separated by whitespace or commas), and the per-point time delta.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use super::time::{format_timestamp, parse_timestamp};
use crate::error::{Error, Result};
use crate::types::{OperatingPoint, Timestamp, VibrationRecord};

pub const PHARMA_POINTS: usize = 3200;
const LINES_PER_RECORD: usize = 5;
const AXIS_NAMES: [&str; 3] = ["x-axis", "y-axis", "z-axis"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PharmaRecord {
    pub start: Timestamp,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    /// Spacing between consecutive points, in seconds.
    pub dt_s: f64,
}

impl PharmaRecord {
    pub fn new(start: Timestamp, x: Vec<f64>, y: Vec<f64>, z: Vec<f64>, dt_s: f64) -> Result<Self> {
        for (name, axis) in AXIS_NAMES.iter().zip([&x, &y, &z]) {
            if axis.len() != PHARMA_POINTS {
                return Err(Error::Contract(format!(
                    "{name}: expected {PHARMA_POINTS}, got {}",
                    axis.len()
                )));
            }
        }
        if !(dt_s > 0.0 && dt_s.is_finite()) {
            return Err(Error::Contract(format!("time delta must be positive, got {dt_s}")));
        }
        Ok(PharmaRecord { start, x, y, z, dt_s })
    }

    pub fn to_vibration_record(&self, operating_point: OperatingPoint) -> Result<VibrationRecord> {
        VibrationRecord::new(
            self.start,
            1.0 / self.dt_s,
            self.x.clone(),
            self.y.clone(),
            self.z.clone(),
            operating_point,
            None,
        )
    }
}

pub fn parse_pharma_txt(path: &Path, tz: Tz) -> Result<Vec<PharmaRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_pharma_reader(file, &path.display().to_string(), tz)
}

fn split_numbers(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
}

pub fn parse_pharma_reader<R: Read>(reader: R, source: &str, tz: Tz) -> Result<Vec<PharmaRecord>> {
    let mut lines = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::parse(source, i + 1, e.to_string()))?;
        lines.push(line);
    }
    // Trailing blank lines are not a record.
    while lines.last().is_some_and(|l| l.trim().is_empty()) {
        lines.pop();
    }
    if lines.is_empty() {
        return Err(Error::Data(format!("{source}: no records")));
    }
    if lines.len() % LINES_PER_RECORD != 0 {
        let complete = lines.len() / LINES_PER_RECORD;
        return Err(Error::parse(
            source,
            lines.len(),
            format!(
                "truncated record {}: {} of {LINES_PER_RECORD} lines present",
                complete + 1,
                lines.len() % LINES_PER_RECORD
            ),
        ));
    }

    let mut records = Vec::with_capacity(lines.len() / LINES_PER_RECORD);
    for (r, group) in lines.chunks(LINES_PER_RECORD).enumerate() {
        let record_no = r + 1;
        let first_line = r * LINES_PER_RECORD + 1;
        let start = parse_timestamp(&group[0], tz).ok_or_else(|| {
            Error::parse(
                source,
                first_line,
                format!("unparseable datetime '{}' (record {record_no})", group[0].trim()),
            )
        })?;
        let mut axes: [Vec<f64>; 3] = Default::default();
        for k in 0..3 {
            let line_no = first_line + 1 + k;
            let mut values = Vec::with_capacity(PHARMA_POINTS);
            for tok in split_numbers(&group[1 + k]) {
                let v = tok.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    Error::parse(
                        source,
                        line_no,
                        format!("{}: bad value '{tok}' (record {record_no})", AXIS_NAMES[k]),
                    )
                })?;
                values.push(v);
            }
            if values.len() != PHARMA_POINTS {
                return Err(Error::parse(
                    source,
                    line_no,
                    format!(
                        "{}: expected {PHARMA_POINTS}, got {} (record {record_no})",
                        AXIS_NAMES[k],
                        values.len()
                    ),
                ));
            }
            axes[k] = values;
        }
        let dt_line = first_line + 4;
        let dt_s = group[4]
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|v| *v > 0.0 && v.is_finite())
            .ok_or_else(|| {
                Error::parse(
                    source,
                    dt_line,
                    format!("time delta must be a positive number, got '{}' (record {record_no})", group[4].trim()),
                )
            })?;
        let [x, y, z] = axes;
        records.push(PharmaRecord { start, x, y, z, dt_s });
    }
    Ok(records)
}

/// Writes records in the five-line layout, comma-separated.
pub fn write_pharma_txt<W: Write>(records: &[PharmaRecord], tz: Tz, mut out: W) -> std::io::Result<()> {
    for r in records {
        writeln!(out, "{}", format_timestamp(r.start, tz))?;
        for axis in [&r.x, &r.y, &r.z] {
            let mut first = true;
            for v in axis.iter() {
                if !first {
                    out.write_all(b",")?;
                }
                write!(out, "{v:?}")?;
                first = false;
            }
            writeln!(out)?;
        }
        writeln!(out, "{:?}", r.dt_s)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::time::DEFAULT_TZ;

    fn axis_line(n: usize, sep: &str, scale: f64) -> String {
        (0..n)
            .map(|i| format!("{}", (i as f64 * scale).sin()))
            .collect::<Vec<_>>()
            .join(sep)
    }

    fn group(n_x: usize) -> String {
        format!(
            "2022-02-01 10:00:00\n{}\n{}\n{}\n0.0003125\n",
            axis_line(n_x, " ", 0.1),
            axis_line(PHARMA_POINTS, ",", 0.2),
            axis_line(PHARMA_POINTS, ", ", 0.3)
        )
    }

    #[test]
    fn one_group_one_record() {
        let recs = parse_pharma_reader(group(PHARMA_POINTS).as_bytes(), "p.txt", DEFAULT_TZ).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].x.len(), PHARMA_POINTS);
        assert_eq!(recs[0].z.len(), PHARMA_POINTS);
        assert_eq!(recs[0].dt_s, 0.0003125);
    }

    #[test]
    fn short_axis_line_names_axis_and_record() {
        let err = parse_pharma_reader(group(3199).as_bytes(), "p.txt", DEFAULT_TZ).unwrap_err();
        assert!(
            err.to_string().contains("x-axis: expected 3200, got 3199 (record 1)"),
            "{err}"
        );
    }

    #[test]
    fn ten_groups() {
        let text: String = (0..10).map(|_| group(PHARMA_POINTS)).collect();
        let recs = parse_pharma_reader(text.as_bytes(), "p.txt", DEFAULT_TZ).unwrap();
        assert_eq!(recs.len(), 10);
    }

    #[test]
    fn truncated_group_errors() {
        let mut text = group(PHARMA_POINTS);
        text.push_str("2022-02-01 10:00:01\n1 2 3\n");
        let err = parse_pharma_reader(text.as_bytes(), "p.txt", DEFAULT_TZ).unwrap_err();
        assert!(err.to_string().contains("truncated record 2"), "{err}");
    }

    #[test]
    fn write_then_parse_is_bit_identical() {
        let recs = parse_pharma_reader(group(PHARMA_POINTS).as_bytes(), "p.txt", DEFAULT_TZ).unwrap();
        let mut buf = Vec::new();
        write_pharma_txt(&recs, DEFAULT_TZ, &mut buf).unwrap();
        let back = parse_pharma_reader(buf.as_slice(), "p.txt", DEFAULT_TZ).unwrap();
        assert_eq!(back.len(), recs.len());
        for (a, b) in recs.iter().zip(&back) {
            assert_eq!(a.start.0.to_bits(), b.start.0.to_bits());
            for (u, v) in a.x.iter().chain(&a.y).chain(&a.z).zip(b.x.iter().chain(&b.y).chain(&b.z)) {
                assert_eq!(u.to_bits(), v.to_bits());
            }
            assert_eq!(a.dt_s.to_bits(), b.dt_s.to_bits());
        }
    }
}

//! Piezoelectric / MEMS tri-axial CSV: optional `X,Y,Z` header, then three
//! numeric columns per row.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{DefectLabel, OperatingPoint, Timestamp, VibrationRecord};

#[derive(Debug, Clone)]
pub struct TriaxialOptions {
    pub sample_rate_hz: f64,
    pub operating_point: OperatingPoint,
    pub label: Option<DefectLabel>,
    /// Split the file into fixed-length records; `None` keeps one record per file.
    pub burst_len: Option<usize>,
    pub start: Timestamp,
}

impl TriaxialOptions {
    pub fn new(sample_rate_hz: f64, operating_point: OperatingPoint) -> Self {
        TriaxialOptions {
            sample_rate_hz,
            operating_point,
            label: None,
            burst_len: None,
            start: Timestamp(0.0),
        }
    }
}

pub fn parse_triaxial_csv(path: &Path, opts: &TriaxialOptions) -> Result<Vec<VibrationRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_triaxial_reader(file, &path.display().to_string(), opts)
}

pub fn parse_triaxial_reader<R: Read>(
    reader: R,
    source: &str,
    opts: &TriaxialOptions,
) -> Result<Vec<VibrationRecord>> {
    if opts.burst_len == Some(0) {
        return Err(Error::Config("burst length must be positive".into()));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let (mut x, mut y, mut z) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::parse(source, line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(i + 1);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != 3 {
            return Err(Error::parse(
                source,
                line,
                format!("expected 3 columns (X, Y, Z), found {}", rec.len()),
            ));
        }
        let parsed: Vec<Option<f64>> = rec.iter().map(|f| f.parse::<f64>().ok()).collect();
        if parsed.iter().any(Option::is_none) {
            // A non-numeric first row is the header.
            if x.is_empty() && i == 0 {
                continue;
            }
            return Err(Error::parse(source, line, format!("malformed row '{}'", rec.iter().collect::<Vec<_>>().join(","))));
        }
        let vals: Vec<f64> = parsed.into_iter().flatten().collect();
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse(source, line, "non-finite value"));
        }
        x.push(vals[0]);
        y.push(vals[1]);
        z.push(vals[2]);
    }
    if x.is_empty() {
        return Err(Error::Data(format!("{source}: no data rows")));
    }
    let burst = opts.burst_len.unwrap_or(x.len());
    let mut records = Vec::with_capacity(x.len().div_ceil(burst));
    for (k, from) in (0..x.len()).step_by(burst).enumerate() {
        let to = (from + burst).min(x.len());
        records.push(VibrationRecord::new(
            opts.start.offset((k * burst) as f64 / opts.sample_rate_hz),
            opts.sample_rate_hz,
            x[from..to].to_vec(),
            y[from..to].to_vec(),
            z[from..to].to_vec(),
            opts.operating_point,
            opts.label,
        )?);
    }
    Ok(records)
}

/// Writes records back to back with an `X,Y,Z` header.
pub fn write_triaxial_csv<W: Write>(records: &[VibrationRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "X,Y,Z")?;
    for r in records {
        for i in 0..r.len() {
            writeln!(out, "{:?},{:?},{:?}", r.x[i], r.y[i], r.z[i])?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> TriaxialOptions {
        TriaxialOptions::new(3200.0, OperatingPoint::new(300).unwrap())
    }

    #[test]
    fn single_row() {
        let recs = parse_triaxial_reader("0.01,0.02,0.03\n".as_bytes(), "mem", &opts()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!((recs[0].x[0], recs[0].y[0], recs[0].z[0]), (0.01, 0.02, 0.03));
    }

    #[test]
    fn header_is_skipped() {
        let text = "X,Y,Z\n1,2,3\n4,5,6\n7,8,9\n1,1,1\n2,2,2\n";
        let recs = parse_triaxial_reader(text.as_bytes(), "mem", &opts()).unwrap();
        assert_eq!(recs[0].len(), 5);
    }

    #[test]
    fn empty_file_errors() {
        let err = parse_triaxial_reader("".as_bytes(), "mem", &opts()).unwrap_err();
        assert!(err.to_string().contains("no data rows"));
        let err = parse_triaxial_reader("X,Y,Z\n".as_bytes(), "mem", &opts()).unwrap_err();
        assert!(err.to_string().contains("no data rows"));
    }

    #[test]
    fn malformed_row_reports_line() {
        let err = parse_triaxial_reader("1,2,3\n4,oops,6\n".as_bytes(), "f.csv", &opts()).unwrap_err();
        assert!(err.to_string().starts_with("f.csv:2:"), "{err}");
        let err = parse_triaxial_reader("1,2,3\n4,5\n".as_bytes(), "f.csv", &opts()).unwrap_err();
        assert!(err.to_string().contains("f.csv:2:") && err.to_string().contains("3 columns"), "{err}");
        assert!(parse_triaxial_reader("1,2,NaN\n".as_bytes(), "f", &opts()).is_err());
    }

    #[test]
    fn bursts_split_the_file() {
        let text: String = (0..10).map(|i| format!("{i},0,0\n")).collect();
        let mut o = opts();
        o.burst_len = Some(4);
        let recs = parse_triaxial_reader(text.as_bytes(), "mem", &o).unwrap();
        assert_eq!(recs.iter().map(|r| r.len()).collect::<Vec<_>>(), vec![4, 4, 2]);
        assert_eq!(recs[1].start, Timestamp(4.0 / 3200.0));
        assert_eq!(recs[2].x[0], 8.0);
    }
}

//! Joins vibration windows to the 5-minute process rows they fall into.

use serde::{Deserialize, Serialize};

use super::labeling::LabeledProcessRow;
use super::process::{MEASUREMENT_COLUMNS, PROCESS_INTERVAL_S};
use crate::error::{Error, Result};
use crate::features::{record_features, FeatureMatrix};
use crate::types::{MachineState, Timestamp, VibrationRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedDataset {
    /// Vibration feature names followed by the process column names.
    pub names: Vec<String>,
    pub timestamps: Vec<Timestamp>,
    pub rows: Vec<Vec<f64>>,
    pub states: Vec<MachineState>,
    /// Process rows whose bucket held no vibration window.
    pub dropped_buckets: usize,
}

impl AlignedDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_feature_matrix(&self) -> Result<FeatureMatrix> {
        let width = self.names.len();
        let flat: Vec<f64> = self.rows.iter().flatten().copied().collect();
        let data = ndarray::Array2::from_shape_vec((self.rows.len(), width), flat)
            .map_err(|e| Error::Invariant(format!("aligned rows: {e}")))?;
        FeatureMatrix::new(self.names.clone(), data)
    }

    pub fn state_codes(&self) -> Vec<usize> {
        self.states.iter().map(|s| s.code()).collect()
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Each process row at `t` collects the vibration windows starting in
/// `[t, t + 300 s)`. Their time-domain features are reduced by per-feature
/// median and the process measurements are appended.
pub fn align_and_impute(
    vibration: &[VibrationRecord],
    process: &[LabeledProcessRow],
) -> Result<AlignedDataset> {
    let features = vibration
        .iter()
        .map(|r| record_features(r).map(|f| (r.start.0, f)))
        .collect::<Result<Vec<_>>>()?;
    let feature_rows: Vec<(f64, Vec<f64>)> =
        features.iter().map(|(t, f)| (*t, f.values.clone())).collect();
    let names = features
        .first()
        .map(|(_, f)| f.names.clone())
        .unwrap_or_default();
    align_feature_rows(&names, feature_rows, process)
}

/// Same as [`align_and_impute`] for precomputed per-window feature rows
/// `(window start in seconds, values)`.
pub fn align_feature_rows(
    feature_names: &[String],
    mut windows: Vec<(f64, Vec<f64>)>,
    process: &[LabeledProcessRow],
) -> Result<AlignedDataset> {
    if windows.is_empty() || process.is_empty() {
        return Err(Error::Data("no temporal overlap: one of the inputs is empty".into()));
    }
    if windows.iter().any(|(_, v)| v.len() != feature_names.len()) {
        return Err(Error::Contract("feature row width does not match names".into()));
    }
    windows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let v_first = windows[0].0;
    let v_last = windows[windows.len() - 1].0;
    let p_first = process[0].row.timestamp.0;
    let p_last = process[process.len() - 1].row.timestamp.0 + PROCESS_INTERVAL_S;
    if v_last < p_first || v_first >= p_last {
        return Err(Error::Data(format!(
            "no temporal overlap: vibration spans [{v_first}, {v_last}], process spans [{p_first}, {p_last})"
        )));
    }

    let mut names = feature_names.to_vec();
    names.extend(MEASUREMENT_COLUMNS.iter().map(|s| s.to_string()));
    let mut out = AlignedDataset {
        names,
        timestamps: Vec::new(),
        rows: Vec::new(),
        states: Vec::new(),
        dropped_buckets: 0,
    };
    let width = feature_names.len();
    let mut lo = 0;
    for p in process {
        let t0 = p.row.timestamp.0;
        let t1 = t0 + PROCESS_INTERVAL_S;
        while lo < windows.len() && windows[lo].0 < t0 {
            lo += 1;
        }
        let mut hi = lo;
        while hi < windows.len() && windows[hi].0 < t1 {
            hi += 1;
        }
        if hi == lo {
            out.dropped_buckets += 1;
            continue;
        }
        let mut row = Vec::with_capacity(width + MEASUREMENT_COLUMNS.len());
        let mut column = Vec::with_capacity(hi - lo);
        for j in 0..width {
            column.clear();
            column.extend(windows[lo..hi].iter().map(|(_, v)| v[j]));
            row.push(median(&mut column));
        }
        row.extend(p.row.measurements());
        out.timestamps.push(p.row.timestamp);
        out.rows.push(row);
        out.states.push(p.state);
    }
    Ok(out)
}

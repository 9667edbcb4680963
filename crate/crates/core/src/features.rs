//! Time-domain features, per-feature normalization and axis selection.
//!
//! A fitted [`FeatureEncoder`] is the artifact shared between the source and
//! target sensors when transferring a classifier: the target's samples are
//! pushed through the source's statistics unchanged.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis as NdAxis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Axis, VibrationRecord};

/// Named feature values for one sample or window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if names.len() != values.len() {
            return Err(Error::Contract(format!(
                "{} feature names for {} values",
                names.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Contract(format!("feature '{}' is not finite", names[i])));
        }
        Ok(FeatureVector { names, values })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

/// Row-major samples × features table with column names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub data: Array2<f64>,
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>, data: Array2<f64>) -> Result<Self> {
        if names.len() != data.ncols() {
            return Err(Error::Contract(format!(
                "{} feature names for {} columns",
                names.len(),
                data.ncols()
            )));
        }
        Ok(FeatureMatrix { names, data })
    }

    pub fn from_rows(rows: &[FeatureVector]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::Contract("no feature rows".into()))?;
        let width = first.names.len();
        let mut data = Array2::zeros((rows.len(), width));
        for (i, row) in rows.iter().enumerate() {
            if row.names != first.names {
                return Err(Error::Data(format!(
                    "feature row {i} has names {:?}, expected {:?}",
                    row.names, first.names
                )));
            }
            for (j, v) in row.values.iter().enumerate() {
                data[[i, j]] = *v;
            }
        }
        FeatureMatrix::new(first.names.clone(), data)
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn width(&self) -> usize {
        self.data.ncols()
    }

    pub fn row(&self, i: usize) -> FeatureVector {
        FeatureVector {
            names: self.names.clone(),
            values: self.data.row(i).to_vec(),
        }
    }

    /// Rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            names: self.names.clone(),
            data: self.data.select(NdAxis(0), indices),
        }
    }

    /// Keeps only the named columns, in the given order.
    pub fn select_columns(&self, names: &[&str]) -> Result<FeatureMatrix> {
        let idx = names
            .iter()
            .map(|n| {
                self.names
                    .iter()
                    .position(|m| m == n)
                    .ok_or_else(|| Error::Data(format!("no feature column named '{n}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureMatrix {
            names: names.iter().map(|s| s.to_string()).collect(),
            data: self.data.select(NdAxis(1), &idx),
        })
    }

    /// Stacks matrices with identical column names.
    pub fn concat(parts: &[&FeatureMatrix]) -> Result<FeatureMatrix> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Contract("nothing to concatenate".into()))?;
        if let Some(bad) = parts.iter().find(|p| p.names != first.names) {
            return Err(Error::Data(format!(
                "feature schema mismatch: {:?} vs {:?}",
                bad.names, first.names
            )));
        }
        let views: Vec<_> = parts.iter().map(|p| p.data.view()).collect();
        let data = ndarray::concatenate(NdAxis(0), &views)
            .map_err(|e| Error::Invariant(format!("concatenate: {e}")))?;
        Ok(FeatureMatrix {
            names: first.names.clone(),
            data,
        })
    }
}

pub const TIME_DOMAIN_FEATURES: [&str; 5] = ["mean", "std", "rms", "peak", "crest"];

/// Mean, population standard deviation, RMS, peak |v| and crest factor of a window.
///
/// Crest factor is `peak / rms`, and 0 for an all-zero window.
pub fn extract_time_domain(window: &[f64]) -> Result<FeatureVector> {
    let values = time_domain_values(window)?;
    FeatureVector::new(
        TIME_DOMAIN_FEATURES.iter().map(|s| s.to_string()).collect(),
        values.to_vec(),
    )
}

/// Same as [`extract_time_domain`] with names prefixed, e.g. `x_rms`.
pub fn extract_time_domain_prefixed(window: &[f64], prefix: &str) -> Result<FeatureVector> {
    let values = time_domain_values(window)?;
    FeatureVector::new(
        TIME_DOMAIN_FEATURES
            .iter()
            .map(|s| format!("{prefix}_{s}"))
            .collect(),
        values.to_vec(),
    )
}

fn time_domain_values(window: &[f64]) -> Result<[f64; 5]> {
    if window.len() < 2 {
        return Err(Error::too_short("feature window samples", 2, window.len()));
    }
    if window.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("feature window contains non-finite values".into()));
    }
    let n = window.len() as f64;
    let mean = window.iter().sum::<f64>() / n;
    let var = window.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let rms = (window.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let peak = window.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let crest = if rms > 0.0 { peak / rms } else { 0.0 };
    Ok([mean, var.sqrt(), rms, peak, crest])
}

/// Time-domain features of all three axes of a record: 15 values named `x_mean` .. `z_crest`.
pub fn record_features(record: &VibrationRecord) -> Result<FeatureVector> {
    let mut names = Vec::with_capacity(15);
    let mut values = Vec::with_capacity(15);
    for axis in Axis::ALL {
        let fv = extract_time_domain_prefixed(record.axis(axis), axis.name())?;
        names.extend(fv.names);
        values.extend(fv.values);
    }
    FeatureVector::new(names, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisSelection {
    AllAxes,
    /// Drops the shaft-direction (y) axis.
    XZOnly,
}

impl AxisSelection {
    pub fn axes(self) -> &'static [Axis] {
        match self {
            AxisSelection::AllAxes => &[Axis::X, Axis::Y, Axis::Z],
            AxisSelection::XZOnly => &[Axis::X, Axis::Z],
        }
    }
}

/// One feature row per sample: the raw axis values of the selected axes.
pub fn select_axes(record: &VibrationRecord, mode: AxisSelection) -> FeatureMatrix {
    let axes = mode.axes();
    let mut data = Array2::zeros((record.len(), axes.len()));
    for (j, &axis) in axes.iter().enumerate() {
        for (i, v) in record.axis(axis).iter().enumerate() {
            data[[i, j]] = *v;
        }
    }
    FeatureMatrix {
        names: axes.iter().map(|a| a.name().to_string()).collect(),
        data,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    /// Pass-through (the "no normalization" baseline of the tuning sweep).
    None,
    ZScore,
    MinMax,
}

impl Normalization {
    pub fn key(self) -> &'static str {
        match self {
            Normalization::None => "none",
            Normalization::ZScore => "zscore",
            Normalization::MinMax => "minmax",
        }
    }

    fn from_key(s: &str) -> Option<Self> {
        match s {
            "none" => Some(Normalization::None),
            "zscore" => Some(Normalization::ZScore),
            "minmax" => Some(Normalization::MinMax),
            _ => None,
        }
    }
}

impl std::str::FromStr for Normalization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Normalization::from_key(s).ok_or_else(|| {
            Error::Config(format!("unknown normalization '{s}' (expected none, zscore or minmax)"))
        })
    }
}

pub const ENCODER_FORMAT_VERSION: u32 = 1;

/// Per-feature normalization statistics plus a selected-feature mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEncoder {
    pub normalization: Normalization,
    pub feature_names: Vec<String>,
    pub mean: Vec<f64>,
    /// Population std; constant features store 1.
    pub std: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub selected_mask: Vec<bool>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl FeatureEncoder {
    /// Fits statistics over every column of `data`; all features start selected.
    pub fn fit(names: &[String], data: ArrayView2<f64>, normalization: Normalization) -> Result<Self> {
        if data.nrows() < 2 {
            return Err(Error::too_short("encoder fitting rows", 2, data.nrows()));
        }
        if names.len() != data.ncols() {
            return Err(Error::Contract(format!(
                "{} feature names for {} columns",
                names.len(),
                data.ncols()
            )));
        }
        let n = data.nrows() as f64;
        let mut mean = Vec::with_capacity(names.len());
        let mut std = Vec::with_capacity(names.len());
        let mut min = Vec::with_capacity(names.len());
        let mut max = Vec::with_capacity(names.len());
        let mut warnings = Vec::new();
        for (j, col) in data.axis_iter(NdAxis(1)).enumerate() {
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("feature '{}' has non-finite values", names[j])));
            }
            let m = col.sum() / n;
            let s = (col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt();
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            mean.push(m);
            if s > 0.0 {
                std.push(s);
            } else {
                warnings.push(format!("feature '{}' is constant; std replaced by 1", names[j]));
                std.push(1.0);
            }
            min.push(lo);
            max.push(hi);
        }
        Ok(FeatureEncoder {
            normalization,
            feature_names: names.to_vec(),
            mean,
            std,
            min,
            max,
            selected_mask: vec![true; names.len()],
            warnings,
        })
    }

    pub fn fit_matrix(m: &FeatureMatrix, normalization: Normalization) -> Result<Self> {
        FeatureEncoder::fit(&m.names, m.data.view(), normalization)
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.feature_names.len() {
            return Err(Error::Contract(format!(
                "mask has {} entries for {} features",
                mask.len(),
                self.feature_names.len()
            )));
        }
        self.selected_mask = mask;
        Ok(self)
    }

    /// Deselects every feature whose name is not in `keep`.
    pub fn keep_only(self, keep: &[&str]) -> Result<Self> {
        let mask = self
            .feature_names
            .iter()
            .map(|n| keep.contains(&n.as_str()))
            .collect();
        self.with_mask(mask)
    }

    pub fn input_width(&self) -> usize {
        self.feature_names.len()
    }

    pub fn output_width(&self) -> usize {
        self.selected_mask.iter().filter(|&&b| b).count()
    }

    pub fn selected_names(&self) -> Vec<String> {
        self.feature_names
            .iter()
            .zip(&self.selected_mask)
            .filter(|(_, &keep)| keep)
            .map(|(n, _)| n.clone())
            .collect()
    }

    fn affine(&self, j: usize) -> (f64, f64) {
        match self.normalization {
            Normalization::None => (0.0, 1.0),
            Normalization::ZScore => (self.mean[j], self.std[j]),
            Normalization::MinMax => {
                let range = self.max[j] - self.min[j];
                (self.min[j], if range > 0.0 { range } else { 1.0 })
            }
        }
    }

    fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        self.selected_mask
            .iter()
            .enumerate()
            .filter(|(_, &keep)| keep)
            .map(|(j, _)| j)
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.input_width() {
            return Err(Error::Contract(format!(
                "encoder expects {} features, got {}",
                self.input_width(),
                row.len()
            )));
        }
        Ok(self
            .selected()
            .map(|j| {
                let (offset, scale) = self.affine(j);
                (row[j] - offset) / scale
            })
            .collect())
    }

    pub fn transform(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        if m.names != self.feature_names {
            return Err(Error::Data(format!(
                "encoder fitted on {:?}, data has {:?}",
                self.feature_names, m.names
            )));
        }
        let cols: Vec<usize> = self.selected().collect();
        let mut out = Array2::zeros((m.len(), cols.len()));
        for (k, &j) in cols.iter().enumerate() {
            let (offset, scale) = self.affine(j);
            let src = m.data.column(j);
            out.column_mut(k)
                .iter_mut()
                .zip(src.iter())
                .for_each(|(o, v)| *o = (v - offset) / scale);
        }
        Ok(FeatureMatrix {
            names: self.selected_names(),
            data: out,
        })
    }

    /// Maps transformed (selected-only) values back to the original scale.
    pub fn inverse_transform_row(&self, encoded: &[f64]) -> Result<Vec<f64>> {
        if encoded.len() != self.output_width() {
            return Err(Error::Contract(format!(
                "expected {} encoded values, got {}",
                self.output_width(),
                encoded.len()
            )));
        }
        Ok(self
            .selected()
            .zip(encoded)
            .map(|(j, v)| {
                let (offset, scale) = self.affine(j);
                v * scale + offset
            })
            .collect())
    }

    pub fn to_text(&self) -> String {
        let floats = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        let mut s = String::new();
        let _ = writeln!(s, "version {ENCODER_FORMAT_VERSION}");
        let _ = writeln!(s, "normalization {}", self.normalization.key());
        let _ = writeln!(s, "names {}", self.feature_names.join(","));
        let _ = writeln!(s, "mean {}", floats(&self.mean));
        let _ = writeln!(s, "std {}", floats(&self.std));
        let _ = writeln!(s, "min {}", floats(&self.min));
        let _ = writeln!(s, "max {}", floats(&self.max));
        let mask: Vec<&str> = self
            .selected_mask
            .iter()
            .map(|&b| if b { "1" } else { "0" })
            .collect();
        let _ = writeln!(s, "mask {}", mask.join(" "));
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut fields = std::collections::HashMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            fields.insert(key.to_string(), rest.to_string());
        }
        let field = |k: &str| {
            fields
                .get(k)
                .ok_or_else(|| Error::Format(format!("encoder file: missing field '{k}'")))
        };
        let version: u32 = field("version")?
            .trim()
            .parse()
            .map_err(|_| Error::Format("encoder file: field 'version' is not an integer".into()))?;
        if version != ENCODER_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "encoder file: field 'version' is {version}, this build reads {ENCODER_FORMAT_VERSION}"
            )));
        }
        let normalization = Normalization::from_key(field("normalization")?.trim()).ok_or_else(|| {
            Error::Format("encoder file: field 'normalization' has an unknown value".into())
        })?;
        let names: Vec<String> = field("names")?.split(',').map(str::to_string).collect();
        let floats = |k: &str| -> Result<Vec<f64>> {
            let v = field(k)?
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>().map_err(|_| {
                        Error::Format(format!("encoder file: field '{k}' has a malformed number '{t}'"))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if v.len() != names.len() {
                return Err(Error::Format(format!(
                    "encoder file: field '{k}' has {} values, expected {}",
                    v.len(),
                    names.len()
                )));
            }
            Ok(v)
        };
        let mean = floats("mean")?;
        let std = floats("std")?;
        let min = floats("min")?;
        let max = floats("max")?;
        let mask = field("mask")?
            .split_whitespace()
            .map(|t| match t {
                "1" => Ok(true),
                "0" => Ok(false),
                _ => Err(Error::Format(format!("encoder file: field 'mask' has bad entry '{t}'"))),
            })
            .collect::<Result<Vec<bool>>>()?;
        if mask.len() != names.len() {
            return Err(Error::Format(format!(
                "encoder file: field 'mask' has {} entries, expected {}",
                mask.len(),
                names.len()
            )));
        }
        Ok(FeatureEncoder {
            normalization,
            feature_names: names,
            mean,
            std,
            min,
            max,
            selected_mask: mask,
            warnings: Vec::new(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        FeatureEncoder::from_text(&text)
    }
}

/// Fits a z-score encoder over a sequence of named feature rows.
pub fn fit_encoder(rows: &[FeatureVector]) -> Result<FeatureEncoder> {
    if rows.len() < 2 {
        return Err(Error::too_short("encoder fitting rows", 2, rows.len()));
    }
    let m = FeatureMatrix::from_rows(rows)?;
    FeatureEncoder::fit_matrix(&m, Normalization::ZScore)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{OperatingPoint, Timestamp};
    use ndarray::array;
    use proptest::prelude::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn alternating_window() {
        let f = extract_time_domain(&[1.0, -1.0, 1.0, -1.0]).unwrap();
        assert_eq!(f.values, vec![0.0, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn single_impulse_window() {
        let f = extract_time_domain(&[0.0, 0.0, 0.0, 2.0]).unwrap();
        assert_eq!(f.get("rms"), Some(1.0));
        assert_eq!(f.get("peak"), Some(2.0));
        assert_eq!(f.get("crest"), Some(2.0));
    }

    #[test]
    fn zero_window_has_zero_crest() {
        let f = extract_time_domain(&[0.0; 4]).unwrap();
        assert_eq!(f.get("crest"), Some(0.0));
        assert_eq!(f.get("rms"), Some(0.0));
    }

    #[test]
    fn short_window_is_rejected() {
        assert!(extract_time_domain(&[1.0]).is_err());
    }

    #[test]
    fn encoder_statistics() {
        let rows = vec![
            FeatureVector::new(names(&["a"]), vec![2.0]).unwrap(),
            FeatureVector::new(names(&["a"]), vec![4.0]).unwrap(),
        ];
        let enc = fit_encoder(&rows).unwrap();
        assert_eq!(enc.mean, vec![3.0]);
        assert_eq!(enc.std, vec![1.0]);
        assert!(enc.warnings.is_empty());
    }

    #[test]
    fn encoder_standardizes_fitting_data() {
        let m = FeatureMatrix::new(
            names(&["a", "b"]),
            array![[1.0, 10.0], [2.0, 30.0], [4.0, 20.0], [9.0, -5.0]],
        )
        .unwrap();
        let enc = FeatureEncoder::fit_matrix(&m, Normalization::ZScore).unwrap();
        let t = enc.transform(&m).unwrap();
        for col in t.data.columns() {
            let mean = col.sum() / col.len() as f64;
            let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64).sqrt();
            assert!(mean.abs() < 1e-10);
            assert!((std - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_feature_warns_and_maps_to_zero() {
        let m = FeatureMatrix::new(names(&["c"]), array![[5.0], [5.0], [5.0]]).unwrap();
        let enc = FeatureEncoder::fit_matrix(&m, Normalization::ZScore).unwrap();
        assert_eq!(enc.std, vec![1.0]);
        assert_eq!(enc.warnings.len(), 1);
        let t = enc.transform(&m).unwrap();
        assert!(t.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn inconsistent_names_are_rejected() {
        let rows = vec![
            FeatureVector::new(names(&["a"]), vec![2.0]).unwrap(),
            FeatureVector::new(names(&["b"]), vec![4.0]).unwrap(),
        ];
        assert!(fit_encoder(&rows).is_err());
    }

    #[test]
    fn axis_projection() {
        let rec = VibrationRecord::new(
            Timestamp(0.0),
            3200.0,
            vec![1.0],
            vec![2.0],
            vec![3.0],
            OperatingPoint::new(300).unwrap(),
            None,
        )
        .unwrap();
        let xz = select_axes(&rec, AxisSelection::XZOnly);
        assert_eq!(xz.names, names(&["x", "z"]));
        assert_eq!(xz.data.row(0).to_vec(), vec![1.0, 3.0]);
        let all = select_axes(&rec, AxisSelection::AllAxes);
        assert_eq!(all.data.row(0).to_vec(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn full_record_yields_one_row_per_sample() {
        // 3200 Hz × 50 bursts × 1 s per burst.
        let n = 3200 * 50;
        let rec = VibrationRecord::new(
            Timestamp(0.0),
            3200.0,
            vec![0.5; n],
            vec![0.1; n],
            vec![0.2; n],
            OperatingPoint::new(300).unwrap(),
            None,
        )
        .unwrap();
        for mode in [AxisSelection::AllAxes, AxisSelection::XZOnly] {
            assert_eq!(select_axes(&rec, mode).len(), n);
        }
        assert_eq!(n * 3, 480_000);
    }

    #[test]
    fn encoder_text_round_trip() {
        let m = FeatureMatrix::new(
            names(&["x", "z"]),
            array![[0.1, 1.0 / 3.0], [1e-300, -7.25], [3.0, 2.0]],
        )
        .unwrap();
        let enc = FeatureEncoder::fit_matrix(&m, Normalization::ZScore)
            .unwrap()
            .with_mask(vec![true, false])
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("enc.txt");
        enc.save(&path).unwrap();
        let back = FeatureEncoder::load(&path).unwrap();
        assert_eq!(back, enc);
        for (a, b) in back.mean.iter().zip(&enc.mean) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.selected_mask, vec![true, false]);
    }

    #[test]
    fn truncated_encoder_file_names_missing_field() {
        let m = FeatureMatrix::new(names(&["x"]), array![[1.0], [2.0]]).unwrap();
        let text = FeatureEncoder::fit_matrix(&m, Normalization::ZScore).unwrap().to_text();
        let cut: String = text.lines().take(4).collect::<Vec<_>>().join("\n");
        let err = FeatureEncoder::from_text(&cut).unwrap_err().to_string();
        assert!(err.contains("'std'"), "{err}");
        let bumped = text.replace("version 1", "version 9");
        assert!(FeatureEncoder::from_text(&bumped).unwrap_err().to_string().contains("'version'"));
    }

    proptest! {
        #[test]
        fn window_feature_identities(w in prop::collection::vec(-100.0f64..100.0, 2..200)) {
            let f = extract_time_domain(&w).unwrap();
            let (mean, std, rms, peak, crest) =
                (f.values[0], f.values[1], f.values[2], f.values[3], f.values[4]);
            prop_assert!((rms * rms - (mean * mean + std * std)).abs() <= 1e-9 * (1.0 + rms * rms));
            if peak > 0.0 {
                prop_assert!(crest >= 1.0 - 1e-12);
            }
        }

        #[test]
        fn encoder_inverse_recovers_inputs(
            rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 2..40),
            minmax in any::<bool>(),
        ) {
            let n = rows.len();
            let data = Array2::from_shape_vec((n, 3), rows.concat()).unwrap();
            let m = FeatureMatrix::new(names(&["a", "b", "c"]), data).unwrap();
            let norm = if minmax { Normalization::MinMax } else { Normalization::ZScore };
            let enc = FeatureEncoder::fit_matrix(&m, norm).unwrap();
            for i in 0..n {
                let row = m.data.row(i).to_vec();
                let back = enc.inverse_transform_row(&enc.transform_row(&row).unwrap()).unwrap();
                for (a, b) in row.iter().zip(&back) {
                    prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
                }
            }
        }
    }
}

//! Relative-error anomaly rule, ground-truth conventions and the forecasting
//! benchmark harness.

pub mod bench;
pub mod datasets;

use std::collections::BTreeSet;

use chrono::NaiveDate;
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forecast::FittedForecaster;
use crate::ingest::time::to_local;
use crate::types::{DefectLabel, TimeSeries, Timestamp};

pub use bench::{
    default_grid, render_tables, run_benchmark, BenchmarkOptions, BenchmarkReport, DatasetSummary, GridCell,
    BENCH_FORMAT_VERSION,
};
pub use datasets::{builtin_dataset, builtin_datasets, BUILTIN_DATASETS};

/// Flags a point when `r = (predicted − actual) / max(|predicted|, epsilon)`
/// exceeds `lambda` (in magnitude when `two_sided`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalyRuleConfig {
    pub lambda: f64,
    pub epsilon: f64,
    pub two_sided: bool,
}

impl AnomalyRuleConfig {
    pub fn new(lambda: f64, epsilon: f64, two_sided: bool) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be positive, got {lambda}")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(AnomalyRuleConfig {
            lambda,
            epsilon,
            two_sided,
        })
    }
}

/// How the harness builds an [`AnomalyRuleConfig`] for each training split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionSettings {
    pub lambda: f64,
    pub two_sided: bool,
    /// epsilon = epsilon_scale × RMS of the training split.
    pub epsilon_scale: f64,
}

impl Default for DetectionSettings {
    fn default() -> Self {
        DetectionSettings {
            lambda: 0.1,
            two_sided: true,
            epsilon_scale: 1e-6,
        }
    }
}

impl DetectionSettings {
    pub fn rule_for(&self, train: &[f64]) -> Result<AnomalyRuleConfig> {
        let rms = (train.iter().map(|v| v * v).sum::<f64>() / train.len().max(1) as f64).sqrt();
        let eps = self.epsilon_scale * rms;
        AnomalyRuleConfig::new(self.lambda, if eps > 0.0 { eps } else { self.epsilon_scale }, self.two_sided)
    }
}

pub fn relative_error(predicted: f64, actual: f64, epsilon: f64) -> f64 {
    (predicted - actual) / predicted.abs().max(epsilon)
}

pub fn flag_anomaly(predicted: f64, actual: f64, cfg: &AnomalyRuleConfig) -> bool {
    let r = relative_error(predicted, actual, cfg.epsilon);
    if cfg.two_sided {
        r.abs() > cfg.lambda
    } else {
        r > cfg.lambda
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub predictions: Vec<f64>,
    pub relative_errors: Vec<f64>,
    pub flags: Vec<bool>,
}

/// Rolling one-step forecasts over `test`, seeded from the model's training
/// tail, with a flag per point.
pub fn detect_series(model: &FittedForecaster, test: &[f64], cfg: &AnomalyRuleConfig) -> Result<Detection> {
    if test.is_empty() {
        return Err(Error::Contract("detection needs at least one test point".into()));
    }
    let predictions = model.rolling_predictions(test);
    if let Some(i) = predictions.iter().position(|p| !p.is_finite()) {
        return Err(Error::Data(format!("forecast for test point {i} is not finite")));
    }
    Ok(flag_predictions(predictions, test, cfg))
}

pub fn flag_predictions(predictions: Vec<f64>, actual: &[f64], cfg: &AnomalyRuleConfig) -> Detection {
    let relative_errors: Vec<f64> = predictions
        .iter()
        .zip(actual)
        .map(|(&p, &a)| relative_error(p, a, cfg.epsilon))
        .collect();
    let flags = predictions
        .iter()
        .zip(actual)
        .map(|(&p, &a)| flag_anomaly(p, a, cfg))
        .collect();
    Detection {
        predictions,
        relative_errors,
        flags,
    }
}

/// Vibration convention: Failure is anomalous, Normal is not, NearFailure is
/// left out of scoring.
pub fn vibration_truth(label: DefectLabel) -> Option<bool> {
    match label {
        DefectLabel::Normal => Some(false),
        DefectLabel::NearFailure => None,
        DefectLabel::Failure => Some(true),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroundTruthRule {
    /// Flags stored with the dataset.
    LabelColumn,
    /// Every point whose local date falls in an inclusive `(from, to)` range.
    DateRanges { ranges: Vec<(NaiveDate, NaiveDate)>, tz: Tz },
    /// The synthetic generator's injection log.
    InjectedSpikes,
}

impl GroundTruthRule {
    pub fn for_dates(dates: &BTreeSet<NaiveDate>, tz: Tz) -> Self {
        GroundTruthRule::DateRanges {
            ranges: dates.iter().map(|d| (*d, *d)).collect(),
            tz,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            GroundTruthRule::LabelColumn => "label column (Failure = anomaly, NearFailure excluded)".into(),
            GroundTruthRule::DateRanges { ranges, tz } => {
                let parts: Vec<String> = ranges
                    .iter()
                    .map(|(a, b)| if a == b { a.to_string() } else { format!("{a}..{b}") })
                    .collect();
                format!("date ranges {} ({})", parts.join(", "), tz.name())
            }
            GroundTruthRule::InjectedSpikes => "injected spikes".into(),
        }
    }
}

/// A univariate series with what is needed to score detections on it.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyDataset {
    pub name: String,
    pub series: TimeSeries,
    /// Wall-clock time of each point, when the data has real timestamps.
    pub timestamps: Option<Vec<Timestamp>>,
    pub labels: Option<Vec<Option<bool>>>,
    pub injected: Option<Vec<usize>>,
    pub truth: GroundTruthRule,
}

impl AnomalyDataset {
    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    /// SHA-256 over the name and the exact bits of every value.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.name.as_bytes());
        h.update([0]);
        for v in &self.series.values {
            h.update(v.to_bits().to_le_bytes());
        }
        hex(&h.finalize())
    }

    pub fn ground_truth(&self) -> Result<Vec<Option<bool>>> {
        ground_truth_labels(self, &self.truth)
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Per-point anomaly truth for `ds` under `rule`; `None` marks unscored points.
pub fn ground_truth_labels(ds: &AnomalyDataset, rule: &GroundTruthRule) -> Result<Vec<Option<bool>>> {
    let n = ds.len();
    match rule {
        GroundTruthRule::LabelColumn => {
            let labels = ds
                .labels
                .as_ref()
                .ok_or_else(|| Error::Data(format!("dataset '{}' has no label column", ds.name)))?;
            if labels.len() != n {
                return Err(Error::Data(format!(
                    "dataset '{}': {} labels for {n} points",
                    ds.name,
                    labels.len()
                )));
            }
            Ok(labels.clone())
        }
        GroundTruthRule::DateRanges { ranges, tz } => {
            let ts = ds
                .timestamps
                .as_ref()
                .ok_or_else(|| Error::Data(format!("dataset '{}' has no timestamps for date ranges", ds.name)))?;
            if ts.len() != n {
                return Err(Error::Data(format!("dataset '{}': {} timestamps for {n} points", ds.name, ts.len())));
            }
            ts.iter()
                .map(|&t| {
                    let d = to_local(t, *tz)
                        .ok_or_else(|| Error::Data(format!("timestamp {} is out of range", t.0)))?
                        .date_naive();
                    Ok(Some(ranges.iter().any(|(a, b)| *a <= d && d <= *b)))
                })
                .collect()
        }
        GroundTruthRule::InjectedSpikes => {
            let log = ds
                .injected
                .as_ref()
                .ok_or_else(|| Error::Data(format!("dataset '{}' has no injection log", ds.name)))?;
            let mut flags = vec![Some(false); n];
            for &i in log {
                *flags
                    .get_mut(i)
                    .ok_or_else(|| Error::Data(format!("injected index {i} beyond {n} points")))? = Some(true);
            }
            Ok(flags)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast::{ForecastModelConfig, ModelSpec, SeasonalNaiveParams};
    use crate::ingest::time::{parse_timestamp, DEFAULT_TZ};
    use proptest::prelude::*;

    fn rule(lambda: f64, two_sided: bool) -> AnomalyRuleConfig {
        AnomalyRuleConfig::new(lambda, 1e-6, two_sided).unwrap()
    }

    #[test]
    fn hand_cases() {
        assert!(flag_anomaly(10.0, 8.0, &rule(0.1, true)));
        assert!(!flag_anomaly(10.0, 10.0, &rule(0.1, true)));
        assert!(flag_anomaly(0.0, 1.0, &rule(0.1, true)));
        // The one-sided rule ignores under-prediction.
        assert!(!flag_anomaly(10.0, 12.0, &rule(0.1, false)));
        assert!(flag_anomaly(10.0, 12.0, &rule(0.1, true)));
        assert!(AnomalyRuleConfig::new(0.0, 1e-6, true).is_err());
        assert!(AnomalyRuleConfig::new(0.1, 0.0, true).is_err());
    }

    #[test]
    fn seasonal_naive_rolling_flags() {
        let cfg = ForecastModelConfig::new(ModelSpec::SeasonalNaive(SeasonalNaiveParams { m: 1 }), 0).unwrap();
        let model = FittedForecaster::fit_values(&cfg, &[1.0, 1.0]).unwrap();
        let d = detect_series(&model, &[1.0, 10.0, 1.0], &rule(0.5, true)).unwrap();
        assert_eq!(d.flags, vec![false, true, true]);
        assert_eq!(d.predictions, vec![1.0, 1.0, 10.0]);
        assert!(detect_series(&model, &[], &rule(0.5, true)).is_err());
    }

    #[test]
    fn epsilon_scales_with_training_rms() {
        let r = DetectionSettings::default().rule_for(&[3.0, -4.0]).unwrap();
        assert!((r.epsilon - 1e-6 * (12.5f64).sqrt()).abs() < 1e-18);
        let z = DetectionSettings::default().rule_for(&[0.0, 0.0]).unwrap();
        assert_eq!(z.epsilon, 1e-6);
    }

    fn dataset(n: usize) -> AnomalyDataset {
        let t0 = parse_timestamp("2022-01-31 23:50:00", DEFAULT_TZ).unwrap();
        let series = TimeSeries::new(t0, 300.0, vec![1.0; n]).unwrap();
        AnomalyDataset {
            name: "t".into(),
            timestamps: Some((0..n).map(|i| series.timestamp(i)).collect()),
            series,
            labels: None,
            injected: Some(vec![1, 3, 5, 7, 9]),
            truth: GroundTruthRule::InjectedSpikes,
        }
    }

    #[test]
    fn truth_rules() {
        let mut ds = dataset(20);
        let spikes = ds.ground_truth().unwrap();
        assert_eq!(spikes.iter().filter(|f| **f == Some(true)).count(), 5);

        let dates: BTreeSet<NaiveDate> = [NaiveDate::from_ymd_opt(2022, 2, 1).unwrap()].into();
        let by_date = ground_truth_labels(&ds, &GroundTruthRule::for_dates(&dates, DEFAULT_TZ)).unwrap();
        // 23:50 and 23:55 on Jan 31, then Feb 1 from midnight.
        assert_eq!(by_date[..3], [Some(false), Some(false), Some(true)]);
        assert!(by_date[2..].iter().all(|f| *f == Some(true)));

        ds.timestamps = None;
        assert!(ground_truth_labels(&ds, &GroundTruthRule::for_dates(&dates, DEFAULT_TZ)).is_err());
        assert!(ground_truth_labels(&ds, &GroundTruthRule::LabelColumn).is_err());
        assert_eq!(vibration_truth(DefectLabel::NearFailure), None);
    }

    proptest! {
        #[test]
        fn raising_lambda_never_adds_flags(p in -100.0f64..100.0, a in -100.0f64..100.0, l1 in 0.01f64..2.0, dl in 0.0f64..2.0) {
            for two in [true, false] {
                let hi = flag_anomaly(p, a, &rule(l1 + dl, two));
                let lo = flag_anomaly(p, a, &rule(l1, two));
                prop_assert!(!hi || lo);
            }
        }

        #[test]
        fn two_sided_is_sign_blind(p in 0.1f64..100.0, e in 0.0f64..50.0, l in 0.01f64..2.0) {
            let c = rule(l, true);
            prop_assert_eq!(flag_anomaly(p, p + e, &c), flag_anomaly(p, p - e, &c));
        }
    }
}

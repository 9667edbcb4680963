//! Built-in synthetic datasets for the benchmark.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::ingest::time::DEFAULT_TZ;
use crate::rng;
use crate::synth::{generate_process, generate_spike_series, generate_vibration, ProcessSynthConfig, SpikeSeriesConfig, SynthConfig};
use crate::types::{DefectLabel, TimeSeries, Timestamp};

use super::{vibration_truth, AnomalyDataset, GroundTruthRule};

pub const BUILTIN_DATASETS: [&str; 3] = ["synth-vibration", "synth-chiller", "synth-spikes"];

/// `synth` expands to this pair.
const DEFAULT_PAIR: [&str; 2] = ["synth-vibration", "synth-chiller"];

/// Windows in the vibration run and their health phases as fractions of it.
const VIBRATION_WINDOWS: usize = 1000;
const VIBRATION_PHASES: [(f64, DefectLabel); 4] = [
    (0.60, DefectLabel::Normal),
    (0.70, DefectLabel::NearFailure),
    (0.85, DefectLabel::Failure),
    (1.00, DefectLabel::Normal),
];
const VIBRATION_RPM: u32 = 600;
const VIBRATION_RATE_HZ: f64 = 3200.0;

fn phase_of(i: usize, n: usize) -> DefectLabel {
    let f = i as f64 / n as f64;
    VIBRATION_PHASES
        .iter()
        .find(|(end, _)| f < *end)
        .map(|(_, l)| *l)
        .unwrap_or(DefectLabel::Normal)
}

/// RMS of the x axis over one shaft revolution per point, through a
/// Normal → NearFailure → Failure → Normal run.
pub fn synth_vibration(seed: u64) -> Result<AnomalyDataset> {
    let per_rev = VIBRATION_RATE_HZ * 60.0 / VIBRATION_RPM as f64;
    let mut values = Vec::with_capacity(VIBRATION_WINDOWS);
    let mut labels = Vec::with_capacity(VIBRATION_WINDOWS);
    for i in 0..VIBRATION_WINDOWS {
        let level = phase_of(i, VIBRATION_WINDOWS);
        let mut cfg = SynthConfig::new(VIBRATION_RPM, level, rng::child_seed(seed, i as u64));
        cfg.sample_rate_hz = VIBRATION_RATE_HZ;
        cfg.duration_s = per_rev / VIBRATION_RATE_HZ;
        let rec = generate_vibration(&cfg)?;
        let rms = (rec.x.iter().map(|v| v * v).sum::<f64>() / rec.x.len() as f64).sqrt();
        values.push(rms);
        labels.push(vibration_truth(level));
    }
    Ok(AnomalyDataset {
        name: "synth-vibration".into(),
        series: TimeSeries::new(Timestamp(0.0), 60.0 / VIBRATION_RPM as f64, values)?,
        timestamps: None,
        labels: Some(labels),
        injected: None,
        truth: GroundTruthRule::LabelColumn,
    })
}

/// Chiller 1 supply temperature over a week of 5-minute rows, with the
/// excursion on the last day (Monday 2021-08-02).
pub fn synth_chiller(seed: u64) -> Result<AnomalyDataset> {
    let mut cfg = ProcessSynthConfig::new(7, BTreeSet::new(), seed);
    cfg.failure_days.insert(cfg.day(6));
    let rows = generate_process(&cfg)?;
    let values: Vec<f64> = rows.iter().map(|r| r.row.chiller1_supply_tmp).collect();
    let timestamps: Vec<Timestamp> = rows.iter().map(|r| r.row.timestamp).collect();
    Ok(AnomalyDataset {
        name: "synth-chiller".into(),
        series: TimeSeries::new(timestamps[0], 300.0, values)?,
        timestamps: Some(timestamps),
        labels: None,
        injected: None,
        truth: GroundTruthRule::for_dates(&cfg.failure_days, DEFAULT_TZ),
    })
}

/// Chiller-like level series with 10 spikes of ±30 % in its last third.
pub fn synth_spikes(seed: u64) -> Result<AnomalyDataset> {
    let s = generate_spike_series(&SpikeSeriesConfig::chiller_like(10, 0.3, seed))?;
    Ok(AnomalyDataset {
        name: "synth-spikes".into(),
        timestamps: Some((0..s.series.len()).map(|i| s.series.timestamp(i)).collect()),
        series: s.series,
        labels: None,
        injected: Some(s.injected),
        truth: GroundTruthRule::InjectedSpikes,
    })
}

pub fn builtin_dataset(name: &str, seed: u64) -> Result<AnomalyDataset> {
    match name {
        "synth-vibration" => synth_vibration(seed),
        "synth-chiller" => synth_chiller(seed),
        "synth-spikes" => synth_spikes(seed),
        other => Err(Error::Config(format!(
            "unknown dataset '{other}' (expected one of synth, {})",
            BUILTIN_DATASETS.join(", ")
        ))),
    }
}

/// Resolves names (`synth` = the vibration and chiller pair), each dataset
/// drawing from its own stream of `seed`.
pub fn builtin_datasets(names: &[String], seed: u64) -> Result<Vec<AnomalyDataset>> {
    let mut expanded: Vec<&str> = Vec::new();
    for n in names {
        let n = n.trim();
        let add: Vec<&str> = if n == "synth" { DEFAULT_PAIR.to_vec() } else { vec![n] };
        for a in add {
            if !expanded.contains(&a) {
                expanded.push(a);
            }
        }
    }
    expanded
        .into_iter()
        .map(|n| {
            let k = BUILTIN_DATASETS.iter().position(|b| *b == n).unwrap_or(usize::MAX) as u64;
            builtin_dataset(n, rng::child_seed(seed, k))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vibration_phases_and_truth() {
        let ds = synth_vibration(1).unwrap();
        assert_eq!(ds.len(), VIBRATION_WINDOWS);
        let truth = ds.ground_truth().unwrap();
        assert_eq!(truth.iter().filter(|t| t.is_none()).count(), 100);
        assert_eq!(truth.iter().filter(|t| **t == Some(true)).count(), 150);
        let normal_mean = ds.series.values[..600].iter().sum::<f64>() / 600.0;
        let failure_mean = ds.series.values[700..850].iter().sum::<f64>() / 150.0;
        assert!(failure_mean > 2.5 * normal_mean, "{normal_mean} {failure_mean}");
    }

    #[test]
    fn chiller_truth_covers_last_day() {
        let ds = synth_chiller(2).unwrap();
        assert_eq!(ds.len(), 7 * 288);
        let truth = ds.ground_truth().unwrap();
        assert!(truth[..6 * 288].iter().all(|t| *t == Some(false)));
        assert!(truth[6 * 288..].iter().all(|t| *t == Some(true)));
    }

    #[test]
    fn spikes_and_names() {
        let ds = synth_spikes(3).unwrap();
        assert_eq!(ds.ground_truth().unwrap().iter().filter(|t| **t == Some(true)).count(), 10);
        let all = builtin_datasets(&["synth".into(), "synth-chiller".into()], 4).unwrap();
        assert_eq!(all.iter().map(|d| d.name.as_str()).collect::<Vec<_>>(), DEFAULT_PAIR);
        assert!(builtin_dataset("nope", 0).is_err());
        assert_eq!(builtin_datasets(&["synth".into()], 4).unwrap(), all);
    }
}

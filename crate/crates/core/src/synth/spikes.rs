//! Level-plus-seasonal series with multiplicative spikes and an injection log.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::types::{TimeSeries, Timestamp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeSeriesConfig {
    pub len: usize,
    pub interval_s: f64,
    pub level: f64,
    pub seasonal_amplitude: f64,
    pub period: usize,
    pub noise_sigma: f64,
    pub n_spikes: usize,
    /// Spiked value = clean value × (1 ± magnitude).
    pub magnitude: f64,
    /// Spikes only land after this fraction of the series.
    pub clean_prefix_fraction: f64,
    /// Minimum index distance between two spikes.
    pub min_gap: usize,
    pub seed: u64,
}

impl SpikeSeriesConfig {
    /// A chiller-like signal: 53 ± a small daily swing, 5-minute cadence.
    pub fn chiller_like(n_spikes: usize, magnitude: f64, seed: u64) -> Self {
        SpikeSeriesConfig {
            len: 1500,
            interval_s: 300.0,
            level: 53.0,
            seasonal_amplitude: 0.5,
            period: 288,
            noise_sigma: 0.3,
            n_spikes,
            magnitude,
            clean_prefix_fraction: 0.66,
            min_gap: 12,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeSeries {
    pub series: TimeSeries,
    /// Sorted indices of the spiked points.
    pub injected: Vec<usize>,
}

impl SpikeSeries {
    pub fn truth_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.series.len()];
        for &i in &self.injected {
            flags[i] = true;
        }
        flags
    }
}

pub fn generate_spike_series(cfg: &SpikeSeriesConfig) -> Result<SpikeSeries> {
    if cfg.len < 2 || cfg.period == 0 || !(cfg.interval_s > 0.0) {
        return Err(Error::Config("spike series needs len ≥ 2, period ≥ 1, positive interval".into()));
    }
    if !(cfg.noise_sigma >= 0.0) || !(cfg.magnitude > 0.0 && cfg.magnitude < 1.0) {
        return Err(Error::Config("noise must be ≥ 0 and spike magnitude in (0, 1)".into()));
    }
    let mut r = rng::stream(cfg.seed, 0);
    let noise = Normal::new(0.0, cfg.noise_sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
    let mut values: Vec<f64> = (0..cfg.len)
        .map(|i| {
            let season = cfg.seasonal_amplitude * (2.0 * PI * i as f64 / cfg.period as f64).sin();
            let eps = if cfg.noise_sigma > 0.0 { noise.sample(&mut r) } else { 0.0 };
            cfg.level + season + eps
        })
        .collect();

    let first = ((cfg.len as f64 * cfg.clean_prefix_fraction).ceil() as usize).min(cfg.len);
    let mut candidates: Vec<usize> = (first..cfg.len).collect();
    let mut placer = rng::stream(cfg.seed, 1);
    candidates.shuffle(&mut placer);
    let mut injected: Vec<usize> = Vec::with_capacity(cfg.n_spikes);
    for c in candidates {
        if injected.len() == cfg.n_spikes {
            break;
        }
        if injected.iter().all(|&j| j.abs_diff(c) >= cfg.min_gap.max(1)) {
            injected.push(c);
        }
    }
    if injected.len() < cfg.n_spikes {
        return Err(Error::Config(format!(
            "cannot place {} spikes {} apart in {} points",
            cfg.n_spikes,
            cfg.min_gap,
            cfg.len - first
        )));
    }
    injected.sort_unstable();
    for &i in &injected {
        let sign = if placer.random::<bool>() { 1.0 } else { -1.0 };
        values[i] *= 1.0 + sign * cfg.magnitude;
    }
    Ok(SpikeSeries {
        series: TimeSeries::new(Timestamp(0.0), cfg.interval_s, values)?,
        injected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_matches_count_and_region() {
        let s = generate_spike_series(&SpikeSeriesConfig::chiller_like(5, 0.3, 1)).unwrap();
        assert_eq!(s.injected.len(), 5);
        assert_eq!(s.truth_flags().iter().filter(|&&f| f).count(), 5);
        assert!(s.injected.iter().all(|&i| i >= 990));
        assert!(s.injected.windows(2).all(|w| w[1] - w[0] >= 12));
    }

    #[test]
    fn spikes_have_requested_relative_size() {
        let mut cfg = SpikeSeriesConfig::chiller_like(10, 0.3, 2);
        cfg.noise_sigma = 0.0;
        let s = generate_spike_series(&cfg).unwrap();
        for &i in &s.injected {
            let clean = 53.0 + 0.5 * (2.0 * PI * i as f64 / 288.0).sin();
            let rel = (s.series.values[i] / clean - 1.0).abs();
            assert!((rel - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn impossible_placement_errors() {
        let mut cfg = SpikeSeriesConfig::chiller_like(10, 0.3, 2);
        cfg.len = 100;
        cfg.min_gap = 20;
        assert!(generate_spike_series(&cfg).is_err());
    }
}

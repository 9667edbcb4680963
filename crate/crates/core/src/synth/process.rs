//! Chiller-plant process data and matching per-bucket vibration windows.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use chrono::{NaiveDate, Timelike};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::labeling::{machine_state, LabeledProcessRow, LabelingConfig};
use crate::ingest::process::{ProcessRow, PROCESS_INTERVAL_S};
use crate::ingest::time::{localize, to_local};
use crate::rng;
use crate::synth::vibration::{generate_vibration, SynthConfig};
use crate::types::{DefectLabel, MachineState, Timestamp, VibrationRecord};

pub const SUPPLY_SETPOINT_F: f64 = 53.0;
pub const SUPPLY_SIGMA_F: f64 = 0.5;
/// Normal-operation supply temperatures are truncated to setpoint ± this band.
pub const SUPPLY_BAND_F: f64 = 2.0;
pub const FAILURE_CEILING_F: f64 = 65.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSynthConfig {
    pub start: NaiveDate,
    pub days: u32,
    /// Days with a chiller excursion; they are also the labeled abnormal dates.
    pub failure_days: BTreeSet<NaiveDate>,
    pub seed: u64,
    pub labeling: LabelingConfig,
}

impl ProcessSynthConfig {
    /// Starts on Tuesday 2021-07-27.
    pub fn new(days: u32, failure_days: BTreeSet<NaiveDate>, seed: u64) -> Self {
        ProcessSynthConfig {
            start: NaiveDate::from_ymd_opt(2021, 7, 27).expect("valid date"),
            days,
            failure_days,
            seed,
            labeling: LabelingConfig::default(),
        }
    }

    /// Day `k` after the start date.
    pub fn day(&self, k: u32) -> NaiveDate {
        self.start + chrono::Days::new(k as u64)
    }
}

/// Rows every 5 minutes from local midnight of the start date.
///
/// On: supply temperatures ~ N(53, 0.5²) truncated to [51, 55]. Off: they
/// relax toward ambient. Failure days: a rise from 06:00 to a peak in
/// [61, 64.5] at 14:00 and back by 22:00, capped at 65.
pub fn generate_process(cfg: &ProcessSynthConfig) -> Result<Vec<LabeledProcessRow>> {
    if cfg.days == 0 {
        return Err(Error::Config("days must be at least 1".into()));
    }
    let tz = cfg.labeling.tz;
    let t0 = localize(cfg.start.and_hms_opt(0, 0, 0).expect("midnight"), tz)
        .ok_or_else(|| Error::Config(format!("start date {} has no local midnight", cfg.start)))?
        .timestamp() as f64;
    let mut labeling = cfg.labeling.clone();
    labeling.abnormal_dates = cfg.failure_days.clone();

    let n = cfg.days as usize * (86_400.0 / PROCESS_INTERVAL_S) as usize;
    let mut r = rng::stream(cfg.seed, 0);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let peaks: std::collections::BTreeMap<NaiveDate, f64> = cfg
        .failure_days
        .iter()
        .map(|d| (*d, r.random_range(61.0..64.5)))
        .collect();

    let mut rows = Vec::with_capacity(n);
    let mut chiller = [SUPPLY_SETPOINT_F; 2];
    for i in 0..n {
        let ts = Timestamp(t0 + i as f64 * PROCESS_INTERVAL_S);
        let local = to_local(ts, tz).expect("representable timestamp");
        let hour = local.hour() as f64 + local.minute() as f64 / 60.0;
        let state = machine_state(ts, &labeling);

        let outside = 70.0 + 10.0 * (2.0 * PI * (hour - 9.0) / 24.0).sin() + unit.sample(&mut r);
        let humidity = (60.0 - 15.0 * (2.0 * PI * (hour - 9.0) / 24.0).sin() + 2.0 * unit.sample(&mut r))
            .clamp(5.0, 100.0);
        let dewpoint = outside - 0.36 * (100.0 - humidity);

        let excursion = peaks.get(&local.date_naive()).map(|&peak| {
            let rise = if (6.0..14.0).contains(&hour) {
                (hour - 6.0) / 8.0
            } else if (14.0..22.0).contains(&hour) {
                (22.0 - hour) / 8.0
            } else {
                0.0
            };
            SUPPLY_SETPOINT_F + rise * (peak - SUPPLY_SETPOINT_F)
        });
        for c in chiller.iter_mut() {
            let z = unit.sample(&mut r);
            *c = match (state, excursion) {
                (MachineState::Abnormal, Some(level)) => {
                    (level + 0.2 * z).clamp(SUPPLY_SETPOINT_F - SUPPLY_BAND_F, FAILURE_CEILING_F)
                }
                (MachineState::Off, _) => *c + 0.02 * (outside - *c) + 0.1 * z,
                _ => truncated_setpoint(z, &mut r, &unit),
            };
        }
        let pressure_base = if state == MachineState::Off { 80.0 } else { 90.0 };
        let row = ProcessRow {
            timestamp: ts,
            air_pressure_1: pressure_base + 0.5 * unit.sample(&mut r),
            air_pressure_2: pressure_base + 1.0 + 0.5 * unit.sample(&mut r),
            chiller1_supply_tmp: chiller[0],
            chiller2_supply_tmp: chiller[1],
            outside_air_temp: outside,
            outside_humidity: humidity,
            outside_dewpoint: dewpoint,
        };
        rows.push(LabeledProcessRow { row, state });
    }
    Ok(rows)
}

/// Redraws until inside the band; clamps after a few attempts.
fn truncated_setpoint(first: f64, r: &mut rng::Rng, unit: &Normal<f64>) -> f64 {
    let mut z = first;
    for _ in 0..8 {
        let v = SUPPLY_SETPOINT_F + SUPPLY_SIGMA_F * z;
        if (v - SUPPLY_SETPOINT_F).abs() <= SUPPLY_BAND_F {
            return v;
        }
        z = unit.sample(r);
    }
    (SUPPLY_SETPOINT_F + SUPPLY_SIGMA_F * z)
        .clamp(SUPPLY_SETPOINT_F - SUPPLY_BAND_F, SUPPLY_SETPOINT_F + SUPPLY_BAND_F)
}

/// Vibration windows that accompany synthetic process rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantVibrationConfig {
    pub rpm: u32,
    pub sample_rate_hz: f64,
    pub window_len: usize,
    pub noise_sigma: f64,
    /// Sensor floor noise while the machine is off.
    pub off_noise_sigma: f64,
    pub seed: u64,
}

impl Default for PlantVibrationConfig {
    fn default() -> Self {
        PlantVibrationConfig {
            rpm: 600,
            sample_rate_hz: 3200.0,
            window_len: 64,
            noise_sigma: 0.3,
            off_noise_sigma: 0.0,
            seed: 0,
        }
    }
}

/// One window per row, starting 1 s into its bucket. On rows vibrate at the
/// Normal level, Abnormal rows at the Failure level, Off rows only carry the
/// sensor floor noise.
pub fn plant_vibration(rows: &[LabeledProcessRow], cfg: &PlantVibrationConfig) -> Result<Vec<VibrationRecord>> {
    rows.iter()
        .enumerate()
        .map(|(i, p)| {
            let level = match p.state {
                MachineState::Abnormal => DefectLabel::Failure,
                _ => DefectLabel::Normal,
            };
            let mut sc = SynthConfig::new(cfg.rpm, level, rng::child_seed(cfg.seed, i as u64));
            sc.sample_rate_hz = cfg.sample_rate_hz;
            sc.duration_s = cfg.window_len as f64 / cfg.sample_rate_hz;
            sc.noise_sigma = cfg.noise_sigma;
            sc.start = p.row.timestamp.offset(1.0);
            let mut rec = generate_vibration(&sc)?;
            if p.state == MachineState::Off {
                let mut r = rng::stream(sc.seed, 99);
                for axis in [&mut rec.x, &mut rec.y, &mut rec.z] {
                    for v in axis.iter_mut() {
                        *v = if cfg.off_noise_sigma > 0.0 {
                            cfg.off_noise_sigma * Normal::new(0.0, 1.0).expect("unit").sample(&mut r)
                        } else {
                            0.0
                        };
                    }
                }
            }
            rec.label = None;
            Ok(rec)
        })
        .collect()
}

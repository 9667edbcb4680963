//! Domain types shared by every module.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seconds since the Unix epoch.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub f64);

impl Timestamp {
    pub fn seconds(self) -> f64 {
        self.0
    }

    pub fn offset(self, seconds: f64) -> Timestamp {
        Timestamp(self.0 + seconds)
    }
}

/// A uniformly sampled univariate series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub start: Timestamp,
    pub interval_s: f64,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(start: Timestamp, interval_s: f64, values: Vec<f64>) -> Result<Self> {
        if !start.0.is_finite() {
            return Err(Error::Contract("series start must be finite".into()));
        }
        if !(interval_s > 0.0 && interval_s.is_finite()) {
            return Err(Error::Contract(format!(
                "series interval must be positive, got {interval_s}"
            )));
        }
        if values.is_empty() {
            return Err(Error::Contract("series has no values".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Contract(format!("series value {i} is not finite")));
        }
        Ok(TimeSeries {
            start,
            interval_s,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, index: usize) -> Timestamp {
        self.start.offset(index as f64 * self.interval_s)
    }

    /// Sub-series `[from, to)` with the start time shifted accordingly.
    pub fn slice(&self, from: usize, to: usize) -> Result<TimeSeries> {
        if from >= to || to > self.len() {
            return Err(Error::Contract(format!(
                "invalid slice {from}..{to} of series with {} values",
                self.len()
            )));
        }
        Ok(TimeSeries {
            start: self.timestamp(from),
            interval_s: self.interval_s,
            values: self.values[from..to].to_vec(),
        })
    }
}

/// Health state of the motor testbed, induced by disk imbalance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DefectLabel {
    Normal,
    NearFailure,
    Failure,
}

impl DefectLabel {
    pub const ALL: [DefectLabel; 3] = [
        DefectLabel::Normal,
        DefectLabel::NearFailure,
        DefectLabel::Failure,
    ];

    pub fn code(self) -> usize {
        match self {
            DefectLabel::Normal => 0,
            DefectLabel::NearFailure => 1,
            DefectLabel::Failure => 2,
        }
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            DefectLabel::Normal => "normal",
            DefectLabel::NearFailure => "near-failure",
            DefectLabel::Failure => "failure",
        }
    }
}

impl fmt::Display for DefectLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DefectLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "normal" | "0" => Ok(DefectLabel::Normal),
            "near-failure" | "nearfailure" | "1" => Ok(DefectLabel::NearFailure),
            "failure" | "2" => Ok(DefectLabel::Failure),
            other => Err(Error::Config(format!(
                "unknown defect label '{other}' (expected normal, near-failure or failure)"
            ))),
        }
    }
}

/// Operating state of the production machine behind the process data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MachineState {
    Off = 0,
    On = 1,
    Abnormal = 2,
}

impl MachineState {
    pub const ALL: [MachineState; 3] = [MachineState::Off, MachineState::On, MachineState::Abnormal];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            MachineState::Off => "off",
            MachineState::On => "on",
            MachineState::Abnormal => "abnormal",
        }
    }
}

impl fmt::Display for MachineState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Motor speed in revolutions per minute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OperatingPoint {
    pub rpm: u32,
}

impl OperatingPoint {
    /// Speeds at which the testbed recordings were taken.
    pub const TESTBED_RPMS: [u32; 10] = [100, 200, 300, 320, 340, 360, 380, 400, 500, 600];

    pub fn new(rpm: u32) -> Result<Self> {
        if rpm == 0 {
            return Err(Error::Contract("rpm must be positive".into()));
        }
        Ok(OperatingPoint { rpm })
    }

    pub fn is_testbed_speed(self) -> bool {
        Self::TESTBED_RPMS.contains(&self.rpm)
    }

    /// Rotation frequency in Hz.
    pub fn rotation_hz(self) -> f64 {
        self.rpm as f64 / 60.0
    }
}

/// One tri-axial acceleration burst.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VibrationRecord {
    pub start: Timestamp,
    pub sample_rate_hz: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub operating_point: OperatingPoint,
    pub label: Option<DefectLabel>,
}

impl VibrationRecord {
    pub fn new(
        start: Timestamp,
        sample_rate_hz: f64,
        x: Vec<f64>,
        y: Vec<f64>,
        z: Vec<f64>,
        operating_point: OperatingPoint,
        label: Option<DefectLabel>,
    ) -> Result<Self> {
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::Contract(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if x.is_empty() || x.len() != y.len() || x.len() != z.len() {
            return Err(Error::Contract(format!(
                "axis lengths must be equal and nonzero (x={}, y={}, z={})",
                x.len(),
                y.len(),
                z.len()
            )));
        }
        Ok(VibrationRecord {
            start,
            sample_rate_hz,
            x,
            y,
            z,
            operating_point,
            label,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate_hz
    }

    pub fn axis(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::X => &self.x,
            Axis::Y => &self.y,
            Axis::Z => &self.z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

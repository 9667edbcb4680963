//! Forecasting-based anomaly detection and defect-type classification for
//! manufacturing vibration and process sensors.

pub mod anomaly;
pub mod augment;
pub mod autoenc;
pub mod classify;
pub mod error;
pub mod features;
pub mod forecast;
pub mod ingest;
pub mod linalg;
pub mod metrics;
pub mod nn;
pub mod rng;
pub mod split;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    Axis, DefectLabel, MachineState, OperatingPoint, TimeSeries, Timestamp, VibrationRecord,
};

//! Synthetic test-bed and plant data.

pub mod process;
pub mod spikes;
pub mod vibration;

pub use process::{generate_process, plant_vibration, PlantVibrationConfig, ProcessSynthConfig};
pub use spikes::{generate_spike_series, SpikeSeries, SpikeSeriesConfig};
pub use vibration::{
    base_amplitude, decimate_to_mems, generate_vibration, mems_source_len, AmplitudeScaling, MemsConfig,
    SynthConfig,
};

//! Imbalanced-rotor vibration: a 1× rotation tone with a weaker 2× harmonic.

use std::f64::consts::PI;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::types::{DefectLabel, OperatingPoint, Timestamp, VibrationRecord};

/// Fundamental amplitude for each imbalance level.
pub fn base_amplitude(level: DefectLabel) -> f64 {
    match level {
        DefectLabel::Normal => 1.0,
        DefectLabel::NearFailure => 2.0,
        DefectLabel::Failure => 3.5,
    }
}

pub const HARMONIC_RATIO: f64 = 0.3;
pub const SHAFT_AXIS_RATIO: f64 = 0.1;

/// How amplitude depends on rotation speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AmplitudeScaling {
    /// Same amplitude at every speed.
    Constant,
    /// `A · (rpm / reference_rpm)^exponent`.
    PowerLaw { reference_rpm: f64, exponent: f64 },
}

impl AmplitudeScaling {
    pub fn factor(self, rpm: u32) -> f64 {
        match self {
            AmplitudeScaling::Constant => 1.0,
            AmplitudeScaling::PowerLaw {
                reference_rpm,
                exponent,
            } => (rpm as f64 / reference_rpm).powf(exponent),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub rpm: u32,
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    pub imbalance_level: DefectLabel,
    pub noise_sigma: f64,
    pub seed: u64,
    pub amplitude_scaling: AmplitudeScaling,
    pub start: Timestamp,
}

impl SynthConfig {
    pub fn new(rpm: u32, imbalance_level: DefectLabel, seed: u64) -> Self {
        SynthConfig {
            rpm,
            sample_rate_hz: 3200.0,
            duration_s: 10.0,
            imbalance_level,
            noise_sigma: 0.3,
            seed,
            amplitude_scaling: AmplitudeScaling::Constant,
            start: Timestamp(0.0),
        }
    }

    /// Number of samples, `round(duration · rate)`.
    pub fn num_samples(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    pub fn amplitude(&self) -> f64 {
        base_amplitude(self.imbalance_level) * self.amplitude_scaling.factor(self.rpm)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rpm == 0 {
            return Err(Error::Config("rpm must be positive".into()));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::Config(format!(
                "sample rate must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::Config(format!(
                "duration must be positive, got {}",
                self.duration_s
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config(format!(
                "noise sigma must be nonnegative, got {}",
                self.noise_sigma
            )));
        }
        if let AmplitudeScaling::PowerLaw { reference_rpm, exponent } = self.amplitude_scaling {
            if !(reference_rpm > 0.0 && exponent.is_finite()) {
                return Err(Error::Config("amplitude scaling needs a positive reference rpm".into()));
            }
        }
        if self.num_samples() < 8 {
            return Err(Error::too_short("synthetic samples (duration × rate)", 8, self.num_samples()));
        }
        Ok(())
    }
}

/// Noiseless x-axis shape at phase `theta`, per unit amplitude.
pub fn unit_waveform(theta: f64) -> f64 {
    theta.sin() + HARMONIC_RATIO * (2.0 * theta).sin()
}

fn noise(sigma: f64, n: usize, seed: u64, axis: u64) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![0.0; n];
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated");
    let mut r = rng::stream(seed, axis);
    (0..n).map(|_| normal.sample(&mut r)).collect()
}

/// x carries the waveform, z the same waveform a quarter rotation later, y a
/// weak fundamental along the shaft. Each axis gets independent N(0, σ²) noise.
pub fn generate_vibration(cfg: &SynthConfig) -> Result<VibrationRecord> {
    cfg.validate()?;
    let n = cfg.num_samples();
    let a = cfg.amplitude();
    let omega = 2.0 * PI * cfg.rpm as f64 / 60.0;
    let (nx, ny, nz) = (
        noise(cfg.noise_sigma, n, cfg.seed, 0),
        noise(cfg.noise_sigma, n, cfg.seed, 1),
        noise(cfg.noise_sigma, n, cfg.seed, 2),
    );
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    for i in 0..n {
        let theta = omega * (i as f64 / cfg.sample_rate_hz);
        x.push(a * unit_waveform(theta) + nx[i]);
        y.push(SHAFT_AXIS_RATIO * a * theta.sin() + ny[i]);
        z.push(a * unit_waveform(theta + PI / 2.0) + nz[i]);
    }
    VibrationRecord::new(
        cfg.start,
        cfg.sample_rate_hz,
        x,
        y,
        z,
        OperatingPoint::new(cfg.rpm)?,
        Some(cfg.imbalance_level),
    )
}

/// Low-rate sensor model: moving-average prefilter, decimation, extra noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemsConfig {
    pub target_rate_hz: f64,
    /// Prefilter length in source samples.
    pub prefilter_len: usize,
    pub extra_noise_sigma: f64,
    pub seed: u64,
}

impl Default for MemsConfig {
    fn default() -> Self {
        MemsConfig {
            target_rate_hz: 10.0,
            prefilter_len: 32,
            extra_noise_sigma: 0.5,
            seed: 0,
        }
    }
}

/// Source samples needed to yield `n` decimated samples.
pub fn mems_source_len(n: usize, source_rate_hz: f64, cfg: &MemsConfig) -> Result<usize> {
    let factor = decimation_factor(source_rate_hz, cfg.target_rate_hz)?;
    Ok(n.saturating_sub(1) * factor + cfg.prefilter_len.max(1))
}

fn decimation_factor(source: f64, target: f64) -> Result<usize> {
    if !(target > 0.0 && target <= source) {
        return Err(Error::Config(format!(
            "target rate {target} Hz must lie in (0, {source}] Hz"
        )));
    }
    let ratio = source / target;
    let factor = ratio.round();
    if (ratio - factor).abs() > 1e-9 * ratio {
        return Err(Error::Config(format!(
            "source rate {source} Hz is not an integer multiple of {target} Hz"
        )));
    }
    Ok(factor as usize)
}

/// Output sample k is the mean of source samples `[k·D, k·D + L)`, plus noise.
pub fn decimate_to_mems(record: &VibrationRecord, cfg: &MemsConfig) -> Result<VibrationRecord> {
    let factor = decimation_factor(record.sample_rate_hz, cfg.target_rate_hz)?;
    let len = cfg.prefilter_len.max(1);
    if record.len() < len {
        return Err(Error::too_short("source samples for MEMS prefilter", len, record.len()));
    }
    if !(cfg.extra_noise_sigma >= 0.0 && cfg.extra_noise_sigma.is_finite()) {
        return Err(Error::Config("MEMS extra noise must be nonnegative".into()));
    }
    let n = (record.len() - len) / factor + 1;
    let mut axes: [Vec<f64>; 3] = Default::default();
    for (k, src) in [&record.x, &record.y, &record.z].into_iter().enumerate() {
        let extra = noise(cfg.extra_noise_sigma, n, cfg.seed, 10 + k as u64);
        axes[k] = (0..n)
            .map(|i| {
                let w = &src[i * factor..i * factor + len];
                w.iter().sum::<f64>() / len as f64 + extra[i]
            })
            .collect();
    }
    let [x, y, z] = axes;
    VibrationRecord::new(
        record.start,
        cfg.target_rate_hz,
        x,
        y,
        z,
        record.operating_point,
        record.label,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn quiet(level: DefectLabel) -> SynthConfig {
        let mut c = SynthConfig::new(600, level, 1);
        c.noise_sigma = 0.0;
        c.duration_s = 1.0;
        c
    }

    #[test]
    fn noiseless_peak_matches_grid_maximum() {
        let rec = generate_vibration(&quiet(DefectLabel::Normal)).unwrap();
        let peak = rec.x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        // Closed form evaluated independently on the sampling grid.
        let mut grid_max = 0.0f64;
        for i in 0..3200 {
            let t = i as f64 / 3200.0;
            let th = 2.0 * PI * 10.0 * t;
            grid_max = grid_max.max((th.sin() + 0.3 * (2.0 * th).sin()).abs());
        }
        assert!((peak - grid_max).abs() < 1e-9);
        // The two tones never peak together, so the max sits below 1 + 0.3.
        assert!(peak < 1.3 && peak > 1.13, "{peak}");
    }

    #[test]
    fn same_seed_same_arrays() {
        let c = SynthConfig::new(300, DefectLabel::Failure, 42);
        assert_eq!(generate_vibration(&c).unwrap(), generate_vibration(&c).unwrap());
        let mut d = c.clone();
        d.seed = 43;
        assert_ne!(generate_vibration(&c).unwrap().x, generate_vibration(&d).unwrap().x);
    }

    #[test]
    fn rms_orders_with_level() {
        let rms = |l| {
            let mut c = SynthConfig::new(300, l, 5);
            c.duration_s = 2.0;
            let r = generate_vibration(&c).unwrap();
            (r.x.iter().map(|v| v * v).sum::<f64>() / r.len() as f64).sqrt()
        };
        let (n, nf, f) = (rms(DefectLabel::Normal), rms(DefectLabel::NearFailure), rms(DefectLabel::Failure));
        assert!(f > nf && nf > n, "{n} {nf} {f}");
    }

    #[test]
    fn spectrum_peaks_at_rotation_frequency() {
        use rustfft::{num_complex::Complex, FftPlanner};
        for rpm in [300, 360, 600] {
            let mut c = quiet(DefectLabel::NearFailure);
            c.rpm = rpm;
            let rec = generate_vibration(&c).unwrap();
            let n = rec.len();
            let mut buf: Vec<Complex<f64>> = rec.x.iter().map(|&v| Complex::new(v, 0.0)).collect();
            FftPlanner::new().plan_fft_forward(n).process(&mut buf);
            let (best, _) = buf[1..n / 2]
                .iter()
                .enumerate()
                .map(|(k, c)| (k + 1, c.norm()))
                .fold((0, 0.0), |acc, (k, m)| if m > acc.1 { (k, m) } else { acc });
            let bin_hz = rec.sample_rate_hz / n as f64;
            assert!((best as f64 * bin_hz - rpm as f64 / 60.0).abs() <= bin_hz, "rpm {rpm}");
        }
    }

    #[test]
    fn z_is_x_a_quarter_turn_later() {
        let rec = generate_vibration(&quiet(DefectLabel::Normal)).unwrap();
        // 600 rpm at 3200 Hz: one turn = 320 samples.
        for i in 0..100 {
            assert!((rec.z[i] - rec.x[i + 80]).abs() < 1e-9);
        }
    }

    #[test]
    fn too_few_samples_rejected() {
        let mut c = SynthConfig::new(600, DefectLabel::Normal, 0);
        c.duration_s = 7.0 / 3200.0;
        assert!(matches!(generate_vibration(&c), Err(Error::TooShort { required: 8, .. })));
    }

    #[test]
    fn power_law_scaling() {
        let mut c = SynthConfig::new(600, DefectLabel::Normal, 0);
        c.amplitude_scaling = AmplitudeScaling::PowerLaw { reference_rpm: 300.0, exponent: 1.0 };
        assert_eq!(c.amplitude(), 2.0);
    }

    #[test]
    fn mems_decimation() {
        let mut c = SynthConfig::new(600, DefectLabel::Normal, 3);
        c.duration_s = 20.0;
        let rec = generate_vibration(&c).unwrap();
        let cfg = MemsConfig { extra_noise_sigma: 0.0, ..MemsConfig::default() };
        let mems = decimate_to_mems(&rec, &cfg).unwrap();
        assert_eq!(mems.sample_rate_hz, 10.0);
        assert_eq!(mems.len(), (rec.len() - 32) / 320 + 1);
        let direct: f64 = rec.x[320..352].iter().sum::<f64>() / 32.0;
        assert!((mems.x[1] - direct).abs() < 1e-12);
        assert_eq!(mems_source_len(mems.len(), 3200.0, &cfg).unwrap(), (mems.len() - 1) * 320 + 32);
        assert!(decimate_to_mems(&rec, &MemsConfig { target_rate_hz: 7.0, ..cfg }).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn shaft_axis_is_weak(rpm in 50u32..1000, sigma in 0.0f64..1.0, seed in any::<u64>(), lvl in 0usize..3) {
            let mut c = SynthConfig::new(rpm, DefectLabel::from_code(lvl).unwrap(), seed);
            c.duration_s = 0.5;
            c.noise_sigma = sigma;
            let r = generate_vibration(&c).unwrap();
            let max_x = r.x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let max_y = r.y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            // Both maxima carry noise; allow it on each side.
            prop_assert!(max_y <= 0.1 * max_x + 0.1 * 5.0 * sigma + 5.0 * sigma);
        }
    }
}

//! Paired synthetic experiments: sensor transfer, cross-speed evaluation,
//! binary relaxation and the cumulative tuning sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::transfer::{train_transfer, Provenance, TransferBundle, TransferOptions};
use super::{binary_relax_set, train_classifier, ClassifierArch, Evaluation, LabeledSet, MlpClassifier, TrainConfig};
use crate::augment::{augment_splits, split_rpms, RpmDataset};
use crate::error::{Error, Result};
use crate::features::{select_axes, AxisSelection, FeatureEncoder, FeatureMatrix, Normalization};
use crate::rng;
use crate::synth::{decimate_to_mems, generate_vibration, mems_source_len, AmplitudeScaling, MemsConfig, SynthConfig};
use crate::types::DefectLabel;

/// How per-sample defect data is synthesized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub per_class: usize,
    pub sample_rate_hz: f64,
    pub noise_sigma: f64,
    pub amplitude_scaling: AmplitudeScaling,
    pub axes: AxisSelection,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            per_class: 1000,
            sample_rate_hz: 3200.0,
            noise_sigma: 0.5,
            amplitude_scaling: AmplitudeScaling::Constant,
            axes: AxisSelection::AllAxes,
        }
    }
}

fn synth_config(rpm: u32, level: DefectLabel, n: usize, cfg: &SampleConfig, seed: u64) -> SynthConfig {
    let mut sc = SynthConfig::new(rpm, level, seed);
    sc.sample_rate_hz = cfg.sample_rate_hz;
    sc.duration_s = n as f64 / cfg.sample_rate_hz;
    sc.noise_sigma = cfg.noise_sigma;
    sc.amplitude_scaling = cfg.amplitude_scaling;
    sc
}

fn check_rows(m: &FeatureMatrix, want: usize) -> Result<()> {
    if m.len() != want {
        return Err(Error::Invariant(format!("synthesized {} rows, wanted {want}", m.len())));
    }
    Ok(())
}

/// `per_class` raw axis samples of each defect level at `rpm`; level `c`
/// draws from stream `c` of `seed`.
pub fn defect_samples(rpm: u32, cfg: &SampleConfig, seed: u64) -> Result<LabeledSet> {
    let mut parts = Vec::new();
    let mut labels = Vec::new();
    for (c, level) in DefectLabel::ALL.into_iter().enumerate() {
        let rec = generate_vibration(&synth_config(rpm, level, cfg.per_class, cfg, rng::child_seed(seed, c as u64)))?;
        let m = select_axes(&rec, cfg.axes);
        check_rows(&m, cfg.per_class)?;
        labels.extend(std::iter::repeat_n(level, m.len()));
        parts.push(m);
    }
    LabeledSet::defect(FeatureMatrix::concat(&parts.iter().collect::<Vec<_>>())?, &labels)
}

/// Low-rate counterpart of [`defect_samples`]: enough source samples are
/// synthesized to yield `per_class` decimated samples per level.
pub fn mems_defect_samples(rpm: u32, cfg: &SampleConfig, mems: &MemsConfig, seed: u64) -> Result<LabeledSet> {
    let source_len = mems_source_len(cfg.per_class, cfg.sample_rate_hz, mems)?;
    let mut parts = Vec::new();
    let mut labels = Vec::new();
    for (c, level) in DefectLabel::ALL.into_iter().enumerate() {
        let rec = generate_vibration(&synth_config(rpm, level, source_len, cfg, rng::child_seed(seed, c as u64)))?;
        let low = decimate_to_mems(
            &rec,
            &MemsConfig {
                seed: rng::child_seed(seed, 10 + c as u64),
                ..mems.clone()
            },
        )?;
        let m = select_axes(&low, cfg.axes);
        check_rows(&m, cfg.per_class)?;
        labels.extend(std::iter::repeat_n(level, m.len()));
        parts.push(m);
    }
    LabeledSet::defect(FeatureMatrix::concat(&parts.iter().collect::<Vec<_>>())?, &labels)
}

/// Fits an encoder on `train` (restricted to `keep` when given) and trains
/// a classifier on the encoded rows.
fn train_encoded(
    train: &LabeledSet,
    normalization: Normalization,
    keep: Option<&[String]>,
    arch: &ClassifierArch,
    cfg: &TrainConfig,
) -> Result<(FeatureEncoder, MlpClassifier)> {
    let mut enc = FeatureEncoder::fit_matrix(&train.features, normalization)?;
    if let Some(keep) = keep {
        let keep: Vec<&str> = keep.iter().map(String::as_str).collect();
        enc = enc.keep_only(&keep)?;
        if enc.output_width() == 0 {
            return Err(Error::Config(format!(
                "feature selection {keep:?} matches none of {:?}",
                train.features.names
            )));
        }
    }
    let encoded = encode(&enc, train)?;
    let model = train_classifier(&encoded, arch, cfg)?;
    Ok((enc, model))
}

fn encode(enc: &FeatureEncoder, set: &LabeledSet) -> Result<LabeledSet> {
    LabeledSet::new(enc.transform(&set.features)?, set.labels.clone(), set.class_names.clone())
}

fn evaluate_encoded(enc: &FeatureEncoder, model: &MlpClassifier, set: &LabeledSet) -> Result<Evaluation> {
    model.evaluate(&encode(enc, set)?)
}

// ---------------------------------------------------------------------------
// Sensor transfer

/// High-rate source sensor and a low-rate, noisier target sensor at one speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransferExperiment {
    pub rpm: u32,
    pub source: SampleConfig,
    /// Target samples per class; the remaining target settings come from `source`.
    pub target_per_class: usize,
    pub mems: MemsConfig,
    pub normalization: Normalization,
    pub arch: ClassifierArch,
    pub train: TrainConfig,
    pub transfer: TransferOptions,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for TransferExperiment {
    fn default() -> Self {
        TransferExperiment {
            rpm: 600,
            source: SampleConfig {
                per_class: 33_334,
                axes: AxisSelection::XZOnly,
                ..SampleConfig::default()
            },
            target_per_class: 667,
            mems: MemsConfig::default(),
            normalization: Normalization::ZScore,
            arch: ClassifierArch::default(),
            train: TrainConfig::default(),
            transfer: TransferOptions::default(),
            train_fraction: 0.7,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub source_fingerprint: String,
    pub target_fingerprint: String,
    pub source_samples: usize,
    pub target_samples: usize,
    pub target_class_counts: Vec<usize>,
    /// Source model on held-out source data.
    pub source: Evaluation,
    /// Trained on target data alone (DNN-R).
    pub dnn_r: Evaluation,
    /// Source model fine-tuned on target data (DNN-TL).
    pub dnn_tl: Evaluation,
    /// Source model applied to target data without fine-tuning.
    pub zero_shot: Evaluation,
    pub provenance: Provenance,
}

impl TransferReport {
    pub fn gain(&self) -> f64 {
        self.dnn_tl.accuracy - self.dnn_r.accuracy
    }
}

/// Streams of the experiment seed: 0 source data, 1 target data, 2 and 3
/// the splits, 4 to 6 the source, DNN-R and DNN-TL training runs.
pub fn run_transfer_experiment(cfg: &TransferExperiment) -> Result<TransferReport> {
    let s = |k| rng::child_seed(cfg.seed, k);
    let source = defect_samples(cfg.rpm, &cfg.source, s(0))?;
    let target_cfg = SampleConfig {
        per_class: cfg.target_per_class,
        ..cfg.source.clone()
    };
    let target = mems_defect_samples(cfg.rpm, &target_cfg, &cfg.mems, s(1))?;
    let (src_train, src_test) = source.split(cfg.train_fraction, s(2))?;
    let (tgt_train, tgt_test) = target.split(cfg.train_fraction, s(3))?;
    let with_seed = |k| TrainConfig {
        seed: s(k),
        ..cfg.train.clone()
    };

    let (src_enc, src_model) = train_encoded(&src_train, cfg.normalization, None, &cfg.arch, &with_seed(4))?;
    let source_eval = evaluate_encoded(&src_enc, &src_model, &src_test)?;
    let bundle = TransferBundle::new(src_model, src_enc, format!("synthetic-source-{}", source.fingerprint()))?;

    let (r_enc, r_model) = train_encoded(&tgt_train, cfg.normalization, None, &cfg.arch, &with_seed(5))?;
    let dnn_r = evaluate_encoded(&r_enc, &r_model, &tgt_test)?;

    let tl = train_transfer(&bundle, &tgt_train, &with_seed(6), &cfg.transfer)?;
    let dnn_tl = evaluate_encoded(&bundle.encoder, &tl, &tgt_test)?;
    let zero_shot = evaluate_encoded(&bundle.encoder, &bundle.model, &tgt_test)?;

    Ok(TransferReport {
        source_fingerprint: source.fingerprint(),
        target_fingerprint: target.fingerprint(),
        source_samples: source.len(),
        target_samples: target.len(),
        target_class_counts: target.class_counts(),
        source: source_eval,
        dnn_r,
        dnn_tl,
        zero_shot,
        provenance: bundle.provenance,
    })
}

// ---------------------------------------------------------------------------
// Cross-speed grid

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossRpmConfig {
    pub normalization: Normalization,
    pub arch: ClassifierArch,
    pub train: TrainConfig,
    pub train_fraction: f64,
    /// Interpolants per speed for the augmented row; `None` skips the row.
    pub augment: Option<usize>,
    pub seed: u64,
}

impl Default for CrossRpmConfig {
    fn default() -> Self {
        CrossRpmConfig {
            normalization: Normalization::ZScore,
            arch: ClassifierArch::default(),
            train: TrainConfig::default(),
            train_fraction: 0.7,
            augment: Some(1000),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossRpmCell {
    pub accuracy: Option<f64>,
    pub confusion: Option<crate::metrics::ConfusionMatrix>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossRpmRow {
    /// Training speed, or `None` for the augmented row.
    pub train_rpm: Option<u32>,
    pub n_train: usize,
    pub n_interpolated: usize,
    /// One cell per test speed, in grid order.
    pub cells: Vec<CrossRpmCell>,
    /// Mean over the cells that produced an accuracy.
    pub average: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossRpmGrid {
    pub rpms: Vec<u32>,
    pub rows: Vec<CrossRpmRow>,
    pub augmented: Option<CrossRpmRow>,
}

impl CrossRpmGrid {
    /// Lowest row average among the single-speed models.
    pub fn worst_single_average(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.average).min_by(f64::total_cmp)
    }

    pub fn accuracy(&self, train: usize, test: usize) -> Option<f64> {
        self.rows.get(train)?.cells.get(test)?.accuracy
    }

    /// Aligned text table: one row per training speed, the augmented row
    /// last, and the row average on the right.
    pub fn render(&self) -> String {
        let mut out = format!("{:<12}", "train\\test");
        for r in &self.rpms {
            out += &format!("{:>9}", r);
        }
        out += &format!("{:>9}\n", "average");
        let pct = |v: Option<f64>| v.map_or_else(|| format!("{:>9}", "error"), |a| format!("{:>9.1}", 100.0 * a));
        for row in self.rows.iter().chain(self.augmented.iter()) {
            let name = row.train_rpm.map_or_else(|| "augmented".to_string(), |r| r.to_string());
            out += &format!("{name:<12}");
            for c in &row.cells {
                out += &pct(c.accuracy);
            }
            out += &pct(row.average);
            out.push('\n');
        }
        out
    }
}

fn grid_row(
    train_rpm: Option<u32>,
    train: &LabeledSet,
    n_interpolated: usize,
    tests: &[&LabeledSet],
    cfg: &CrossRpmConfig,
    train_seed: u64,
) -> CrossRpmRow {
    let tc = TrainConfig {
        seed: train_seed,
        ..cfg.train.clone()
    };
    let trained = train_encoded(train, cfg.normalization, None, &cfg.arch, &tc);
    let cells: Vec<CrossRpmCell> = tests
        .iter()
        .map(|test| {
            match trained
                .as_ref()
                .map_err(|e| e.to_string())
                .and_then(|(enc, m)| evaluate_encoded(enc, m, test).map_err(|e| e.to_string()))
            {
                Ok(ev) => CrossRpmCell {
                    accuracy: Some(ev.accuracy),
                    confusion: Some(ev.confusion),
                    error: None,
                },
                Err(e) => CrossRpmCell {
                    accuracy: None,
                    confusion: None,
                    error: Some(e),
                },
            }
        })
        .collect();
    let ok: Vec<f64> = cells.iter().filter_map(|c| c.accuracy).collect();
    CrossRpmRow {
        train_rpm,
        n_train: train.len(),
        n_interpolated,
        average: (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64),
        cells,
    }
}

/// Trains one model per speed and evaluates it on every speed's test split,
/// plus a model on the pooled (and optionally interpolated) training splits.
/// Failed cells carry their error instead of aborting the grid.
pub fn cross_rpm_matrix(per_rpm: &[RpmDataset], cfg: &CrossRpmConfig) -> Result<CrossRpmGrid> {
    if per_rpm.len() < 2 {
        return Err(Error::too_short("speed datasets for a cross-speed grid", 2, per_rpm.len()));
    }
    let splits = split_rpms(per_rpm, cfg.train_fraction, rng::child_seed(cfg.seed, 0))?;
    let tests: Vec<&LabeledSet> = splits.iter().map(|s| &s.test).collect();
    let rows: Vec<CrossRpmRow> = splits
        .par_iter()
        .enumerate()
        .map(|(k, s)| grid_row(Some(s.rpm), &s.train, 0, &tests, cfg, rng::child_seed(cfg.seed, 1 + k as u64)))
        .collect();
    let augmented = match cfg.augment {
        None => None,
        Some(n_new) => {
            let seed = rng::child_seed(cfg.seed, 1000);
            let aug = augment_splits(&splits, n_new, seed)?;
            Some(grid_row(None, &aug.set, aug.count(true), &tests, cfg, rng::child_seed(seed, 1)))
        }
    };
    Ok(CrossRpmGrid {
        rpms: splits.iter().map(|s| s.rpm).collect(),
        rows,
        augmented,
    })
}

// ---------------------------------------------------------------------------
// Binary relaxation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BinaryRelaxConfig {
    pub rpms: Vec<u32>,
    pub samples: SampleConfig,
    pub normalization: Normalization,
    pub arch: ClassifierArch,
    pub train: TrainConfig,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for BinaryRelaxConfig {
    fn default() -> Self {
        BinaryRelaxConfig {
            rpms: vec![300, 400, 500, 600],
            samples: SampleConfig {
                noise_sigma: 0.2,
                ..SampleConfig::default()
            },
            normalization: Normalization::ZScore,
            arch: ClassifierArch::default(),
            train: TrainConfig {
                epochs: 50,
                batch_size: 50,
                learning_rate: 0.05,
                seed: 0,
            },
            train_fraction: 0.7,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryRelaxRow {
    pub rpm: u32,
    pub binary: Evaluation,
    pub multiclass: Evaluation,
}

/// Same-speed accuracy of a three-class and a normal/not-normal model
/// trained on identical samples, split and seed.
pub fn binary_vs_multiclass(cfg: &BinaryRelaxConfig) -> Result<Vec<BinaryRelaxRow>> {
    cfg.rpms
        .par_iter()
        .enumerate()
        .map(|(k, &rpm)| {
            let s = |t| rng::child_seed(rng::child_seed(cfg.seed, k as u64), t);
            let set = defect_samples(rpm, &cfg.samples, s(0))?;
            let (train, test) = set.split(cfg.train_fraction, s(1))?;
            let tc = TrainConfig {
                seed: s(2),
                ..cfg.train.clone()
            };
            let (enc3, m3) = train_encoded(&train, cfg.normalization, None, &cfg.arch, &tc)?;
            let (enc2, m2) = train_encoded(&binary_relax_set(&train)?, cfg.normalization, None, &cfg.arch, &tc)?;
            Ok(BinaryRelaxRow {
                rpm,
                binary: evaluate_encoded(&enc2, &m2, &binary_relax_set(&test)?)?,
                multiclass: evaluate_encoded(&enc3, &m3, &test)?,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Tuning sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuningStep {
    /// Keep only these features.
    FeatureSelection(Vec<String>),
    FeatureNormalization(Normalization),
    /// Hidden widths: one value applies to every current layer, several
    /// values replace the widths outright.
    Neurons(Vec<usize>),
    /// Hidden depth; added layers repeat the last width.
    HiddenLayers(usize),
    Epochs(usize),
    BatchSize(usize),
}

impl TuningStep {
    pub fn label(&self) -> String {
        match self {
            TuningStep::FeatureSelection(f) => format!("feature selection ({})", f.join(",")),
            TuningStep::FeatureNormalization(n) => format!("feature normalization ({})", n.key()),
            TuningStep::Neurons(w) => format!(
                "neurons per layer ({})",
                w.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("-")
            ),
            TuningStep::HiddenLayers(d) => format!("hidden layers ({d})"),
            TuningStep::Epochs(e) => format!("epochs ({e})"),
            TuningStep::BatchSize(b) => format!("batch size ({b})"),
        }
    }

    /// Parses `key=value` with keys features, normalization, neurons
    /// (`80` or `50-80-100`), layers, epochs and batch.
    pub fn parse(text: &str) -> Result<TuningStep> {
        let (key, value) = text
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("tuning step '{text}' is not key=value")))?;
        let num = |v: &str| {
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| Error::Config(format!("tuning step '{text}': expected a positive integer")))
        };
        match key.trim() {
            "features" => Ok(TuningStep::FeatureSelection(
                value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
            )),
            "normalization" => Ok(TuningStep::FeatureNormalization(value.trim().parse()?)),
            "neurons" => Ok(TuningStep::Neurons(value.split('-').map(num).collect::<Result<_>>()?)),
            "layers" => Ok(TuningStep::HiddenLayers(num(value)?)),
            "epochs" => Ok(TuningStep::Epochs(num(value)?)),
            "batch" => Ok(TuningStep::BatchSize(num(value)?)),
            other => Err(Error::Config(format!(
                "unknown tuning step '{other}' (expected features, normalization, neurons, layers, epochs or batch)"
            ))),
        }
    }

    /// Feature selection, z-score, 80 neurons, 3 hidden layers, 50 epochs,
    /// batch size 50.
    pub fn default_ledger() -> Vec<TuningStep> {
        vec![
            TuningStep::FeatureSelection(vec!["x".into(), "z".into()]),
            TuningStep::FeatureNormalization(Normalization::ZScore),
            TuningStep::Neurons(vec![80]),
            TuningStep::HiddenLayers(3),
            TuningStep::Epochs(50),
            TuningStep::BatchSize(50),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Each step builds on all earlier ones.
    Cumulative,
    /// Each step is applied to the baseline alone.
    Independent,
}

impl std::str::FromStr for SweepMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cumulative" => Ok(SweepMode::Cumulative),
            "independent" => Ok(SweepMode::Independent),
            other => Err(Error::Config(format!(
                "unknown sweep mode '{other}' (expected cumulative or independent)"
            ))),
        }
    }
}

/// Everything one sweep entry trains with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSetup {
    /// `None` keeps every feature.
    pub features: Option<Vec<String>>,
    pub normalization: Normalization,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
}

impl SweepSetup {
    fn apply(&mut self, step: &TuningStep) {
        match step {
            TuningStep::FeatureSelection(f) => self.features = Some(f.clone()),
            TuningStep::FeatureNormalization(n) => self.normalization = *n,
            TuningStep::Neurons(w) if w.len() == 1 => self.hidden.iter_mut().for_each(|h| *h = w[0]),
            TuningStep::Neurons(w) => self.hidden = w.clone(),
            TuningStep::HiddenLayers(d) => {
                let last = self.hidden.last().copied().unwrap_or(50);
                self.hidden.resize(*d, last);
            }
            TuningStep::Epochs(e) => self.epochs = *e,
            TuningStep::BatchSize(b) => self.batch_size = *b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    /// "baseline" or the step's label.
    pub step: String,
    pub setup: SweepSetup,
    pub accuracy: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub mode: SweepMode,
    /// Baseline widths; the baseline uses every feature without normalization.
    pub arch: ClassifierArch,
    pub train: TrainConfig,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            mode: SweepMode::Cumulative,
            arch: ClassifierArch::default(),
            train: TrainConfig::default(),
            train_fraction: 0.7,
            seed: 0,
        }
    }
}

/// Baseline accuracy followed by one accuracy per step. Every entry uses
/// the same split and training seed so the differences are paired.
pub fn tuning_sweep(set: &LabeledSet, steps: &[TuningStep], cfg: &SweepConfig) -> Result<Vec<SweepEntry>> {
    let (train, test) = set.split(cfg.train_fraction, rng::child_seed(cfg.seed, 0))?;
    let baseline = SweepSetup {
        features: None,
        normalization: Normalization::None,
        hidden: cfg.arch.hidden.clone(),
        epochs: cfg.train.epochs,
        batch_size: cfg.train.batch_size,
    };
    let mut setups = vec![("baseline".to_string(), baseline.clone())];
    let mut current = baseline.clone();
    for step in steps {
        let mut next = match cfg.mode {
            SweepMode::Cumulative => current.clone(),
            SweepMode::Independent => baseline.clone(),
        };
        next.apply(step);
        setups.push((step.label(), next.clone()));
        current = next;
    }
    let train_seed = rng::child_seed(cfg.seed, 1);
    Ok(setups
        .into_par_iter()
        .map(|(step, setup)| {
            let tc = TrainConfig {
                epochs: setup.epochs,
                batch_size: setup.batch_size,
                seed: train_seed,
                ..cfg.train.clone()
            };
            let arch = ClassifierArch {
                hidden: setup.hidden.clone(),
            };
            let result = train_encoded(&train, setup.normalization, setup.features.as_deref(), &arch, &tc)
                .and_then(|(enc, m)| evaluate_encoded(&enc, &m, &test));
            let (accuracy, error) = match result {
                Ok(ev) => (Some(ev.accuracy), None),
                Err(e) => (None, Some(e.to_string())),
            };
            SweepEntry {
                step,
                setup,
                accuracy,
                error,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(per_class: usize, noise: f64) -> SampleConfig {
        SampleConfig {
            per_class,
            noise_sigma: noise,
            ..SampleConfig::default()
        }
    }

    fn quick_train(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: 20,
            learning_rate: 0.02,
            seed: 0,
        }
    }

    #[test]
    fn defect_samples_shape() {
        let s = defect_samples(600, &small(50, 0.1), 1).unwrap();
        assert_eq!(s.len(), 150);
        assert_eq!(s.class_counts(), vec![50, 50, 50]);
        assert_eq!(s.features.names, vec!["x", "y", "z"]);
        let m = mems_defect_samples(600, &small(20, 0.1), &MemsConfig::default(), 1).unwrap();
        assert_eq!(m.class_counts(), vec![20, 20, 20]);
    }

    #[test]
    fn two_speed_grid_shape_and_determinism() {
        let per: Vec<RpmDataset> = [300u32, 600]
            .iter()
            .enumerate()
            .map(|(k, &rpm)| RpmDataset {
                rpm,
                set: defect_samples(
                    rpm,
                    &SampleConfig {
                        amplitude_scaling: AmplitudeScaling::PowerLaw {
                            reference_rpm: 450.0,
                            exponent: 1.0,
                        },
                        ..small(200, 0.1)
                    },
                    k as u64,
                )
                .unwrap(),
            })
            .collect();
        let cfg = CrossRpmConfig {
            train: quick_train(15),
            augment: Some(100),
            ..CrossRpmConfig::default()
        };
        let g = cross_rpm_matrix(&per, &cfg).unwrap();
        assert_eq!(g.rows.len(), 2);
        assert!(g.rows.iter().all(|r| r.cells.len() == 2 && r.average.is_some()));
        let aug = g.augmented.as_ref().unwrap();
        assert_eq!(aug.n_interpolated, 200);
        assert_eq!(aug.n_train, 2 * 420 + 200);
        for i in 0..2 {
            let off = g.accuracy(i, 1 - i).unwrap();
            assert!(g.accuracy(i, i).unwrap() >= off, "{}", g.render());
        }
        assert_eq!(g, cross_rpm_matrix(&per, &cfg).unwrap());
        assert!(g.render().contains("augmented"));
        assert!(cross_rpm_matrix(&per[..1], &cfg).is_err());
    }

    #[test]
    fn grid_cells_record_errors() {
        let set = defect_samples(600, &small(30, 0.1), 0).unwrap();
        let per = vec![
            RpmDataset { rpm: 300, set: set.clone() },
            RpmDataset { rpm: 600, set },
        ];
        let cfg = CrossRpmConfig {
            train: TrainConfig {
                learning_rate: 1e300,
                ..quick_train(2)
            },
            augment: None,
            ..CrossRpmConfig::default()
        };
        let g = cross_rpm_matrix(&per, &cfg).unwrap();
        assert!(g.rows.iter().all(|r| r.cells.iter().all(|c| c.error.is_some())));
        assert!(g.augmented.is_none());
    }

    #[test]
    fn sweep_lengths_and_modes() {
        let set = defect_samples(600, &small(60, 0.2), 3).unwrap();
        let cfg = SweepConfig {
            train: quick_train(3),
            ..SweepConfig::default()
        };
        let base = tuning_sweep(&set, &[], &cfg).unwrap();
        assert_eq!(base.len(), 1);
        assert_eq!(base[0].step, "baseline");
        let ledger = vec![
            TuningStep::FeatureSelection(vec!["x".into(), "z".into()]),
            TuningStep::FeatureNormalization(Normalization::ZScore),
            TuningStep::Neurons(vec![8]),
            TuningStep::HiddenLayers(3),
            TuningStep::Epochs(4),
            TuningStep::BatchSize(10),
        ];
        let cum = tuning_sweep(&set, &ledger, &cfg).unwrap();
        assert_eq!(cum.len(), 7);
        assert!(cum.iter().all(|e| e.accuracy.is_some()));
        assert_eq!(cum[6].setup.hidden, vec![8, 8, 8]);
        assert_eq!(cum[6].setup.features.as_deref(), Some(&["x".to_string(), "z".to_string()][..]));
        let ind = tuning_sweep(
            &set,
            &ledger,
            &SweepConfig {
                mode: SweepMode::Independent,
                ..cfg.clone()
            },
        )
        .unwrap();
        assert_eq!(ind[6].setup.hidden, vec![50, 50]);
        assert_eq!(ind[6].setup.batch_size, 10);
        assert_eq!(ind[6].setup.normalization, Normalization::None);
        let bad = tuning_sweep(&set, &[TuningStep::FeatureSelection(vec!["w".into()])], &cfg).unwrap();
        assert!(bad[1].error.is_some());
    }

    #[test]
    fn step_parsing() {
        assert_eq!(TuningStep::parse("neurons=50-80-100").unwrap(), TuningStep::Neurons(vec![50, 80, 100]));
        assert_eq!(TuningStep::parse("layers=3").unwrap(), TuningStep::HiddenLayers(3));
        assert_eq!(
            TuningStep::parse("features=x, z").unwrap(),
            TuningStep::FeatureSelection(vec!["x".into(), "z".into()])
        );
        assert!(TuningStep::parse("batch=0").is_err());
        assert!(TuningStep::parse("dropout=1").is_err());
        assert!(TuningStep::parse("epochs").is_err());
        assert_eq!("independent".parse::<SweepMode>().unwrap(), SweepMode::Independent);
    }

    #[test]
    fn normalization_step_does_not_hurt() {
        let mut diffs = Vec::new();
        for seed in 0..5 {
            let set = defect_samples(600, &small(150, 0.3), 10 + seed).unwrap();
            let cfg = SweepConfig {
                train: quick_train(10),
                seed,
                ..SweepConfig::default()
            };
            let e = tuning_sweep(&set, &[TuningStep::FeatureNormalization(Normalization::ZScore)], &cfg).unwrap();
            diffs.push(e[1].accuracy.unwrap() - e[0].accuracy.unwrap());
        }
        diffs.sort_by(f64::total_cmp);
        assert!(diffs[2] >= -0.02, "{diffs:?}");
    }
}

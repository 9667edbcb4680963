//! Dense softmax classifiers for defect levels: training, evaluation,
//! transfer between sensors and the cross-speed and tuning experiments.

pub mod experiments;
pub mod transfer;

use std::path::Path;

use ndarray::{Array2, Axis as NdAxis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::anomaly::hex;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::metrics::ConfusionMatrix;
use crate::nn::loss::{softmax, softmax_cross_entropy};
use crate::nn::{check_loss, sgd_step, sgd_step_masked, zeros_like, Activation, Mlp, Params};
use crate::rng;
use crate::split::stratified;
use crate::types::DefectLabel;

pub use experiments::{
    binary_vs_multiclass, cross_rpm_matrix, defect_samples, mems_defect_samples, run_transfer_experiment,
    tuning_sweep, BinaryRelaxConfig, BinaryRelaxRow, CrossRpmCell, CrossRpmConfig, CrossRpmGrid, CrossRpmRow,
    SampleConfig, SweepConfig, SweepEntry, SweepMode, SweepSetup, TransferExperiment, TransferReport, TuningStep,
};
pub use transfer::{train_transfer, Provenance, TransferBundle, TransferOptions};

pub const CLASSIFIER_FORMAT_VERSION: u32 = 1;

pub const BINARY_CLASS_NAMES: [&str; 2] = ["normal", "not-normal"];

/// Features with one integer class label per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSet {
    pub features: FeatureMatrix,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl LabeledSet {
    pub fn new(features: FeatureMatrix, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::Contract(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::Data(format!(
                "label {bad} outside the {} classes {:?}",
                class_names.len(),
                class_names
            )));
        }
        Ok(LabeledSet {
            features,
            labels,
            class_names,
        })
    }

    /// Three-class set labelled by defect level.
    pub fn defect(features: FeatureMatrix, labels: &[DefectLabel]) -> Result<Self> {
        LabeledSet::new(
            features,
            labels.iter().map(|l| l.code()).collect(),
            DefectLabel::ALL.iter().map(|l| l.name().to_string()).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.num_classes()];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }

    pub fn select(&self, indices: &[usize]) -> LabeledSet {
        LabeledSet {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }

    /// Stratified train/test split.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(LabeledSet, LabeledSet)> {
        let (train, test) = stratified(&self.labels, train_fraction, seed)?;
        Ok((self.select(&train), self.select(&test)))
    }

    /// Row concatenation; schemas and class names must agree.
    pub fn concat(parts: &[&LabeledSet]) -> Result<LabeledSet> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Contract("nothing to concatenate".into()))?;
        if let Some(p) = parts.iter().find(|p| p.class_names != first.class_names) {
            return Err(Error::Data(format!(
                "class names differ: {:?} vs {:?}",
                first.class_names, p.class_names
            )));
        }
        let features = FeatureMatrix::concat(&parts.iter().map(|p| &p.features).collect::<Vec<_>>())?;
        let labels = parts.iter().flat_map(|p| p.labels.iter().copied()).collect();
        LabeledSet::new(features, labels, first.class_names.clone())
    }

    /// Same rows with `map` applied to the labels.
    pub fn relabel(&self, class_names: Vec<String>, map: impl Fn(usize) -> usize) -> Result<LabeledSet> {
        LabeledSet::new(
            self.features.clone(),
            self.labels.iter().map(|&l| map(l)).collect(),
            class_names,
        )
    }

    /// SHA-256 over names, values and labels.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for n in self.features.names.iter().chain(&self.class_names) {
            h.update(n.as_bytes());
            h.update([0]);
        }
        for v in &self.features.data {
            h.update(v.to_bits().to_le_bytes());
        }
        for &l in &self.labels {
            h.update((l as u64).to_le_bytes());
        }
        hex(&h.finalize())
    }
}

/// Hidden-layer widths; ReLU hidden layers and a softmax output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifierArch {
    pub hidden: Vec<usize>,
}

impl Default for ClassifierArch {
    fn default() -> Self {
        ClassifierArch { hidden: vec![50, 50] }
    }
}

impl ClassifierArch {
    /// Three hidden layers of 50, 80 and 100 units.
    pub fn tuned() -> Self {
        ClassifierArch {
            hidden: vec![50, 80, 100],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden.contains(&0) {
            return Err(Error::Config(format!("hidden widths must be positive, got {:?}", self.hidden)));
        }
        Ok(())
    }

    pub fn sizes(&self, input: usize, classes: usize) -> Vec<usize> {
        let mut s = vec![input];
        s.extend(&self.hidden);
        s.push(classes);
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 100,
            learning_rate: 0.005,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Trained dense classifier. The network emits logits; probabilities come
/// from a row softmax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpClassifier {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub mlp: Mlp,
    pub train_config: TrainConfig,
    /// Mean training cross-entropy per epoch.
    pub loss_history: Vec<f64>,
    pub provenance: Option<Provenance>,
}

/// Accuracy and the confusion matrix it was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Normal → 0, NearFailure and Failure → 1.
pub fn binary_relax(labels: &[DefectLabel]) -> Vec<usize> {
    labels
        .iter()
        .map(|l| usize::from(*l != DefectLabel::Normal))
        .collect()
}

/// [`binary_relax`] applied to a three-class defect set.
pub fn binary_relax_set(set: &LabeledSet) -> Result<LabeledSet> {
    let defect_names: Vec<String> = DefectLabel::ALL.iter().map(|l| l.name().to_string()).collect();
    if set.class_names != defect_names {
        return Err(Error::Data(format!(
            "binary relaxation needs defect labels {defect_names:?}, got {:?}",
            set.class_names
        )));
    }
    set.relabel(
        BINARY_CLASS_NAMES.iter().map(|s| s.to_string()).collect(),
        |l| usize::from(l != DefectLabel::Normal.code()),
    )
}

fn check_trainable(set: &LabeledSet) -> Result<()> {
    if set.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    if set.features.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("training features contain non-finite values".into()));
    }
    Ok(())
}

/// Mini-batch SGD on softmax cross-entropy, appending one mean loss per
/// epoch to `history`. Blocks flagged in `frozen` are not updated.
fn fit_epochs(
    mlp: &mut Mlp,
    set: &LabeledSet,
    cfg: &TrainConfig,
    learning_rate: f64,
    frozen: Option<&[bool]>,
    history: &mut Vec<f64>,
) -> Result<()> {
    let x = &set.features.data;
    let mut order: Vec<usize> = (0..set.len()).collect();
    let mut shuffle = rng::stream(cfg.seed, 1);
    let mut grads = zeros_like(mlp);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let xb = x.select(NdAxis(0), batch);
            let yb: Vec<usize> = batch.iter().map(|&i| set.labels[i]).collect();
            let cache = mlp.forward_cached(&xb);
            let (loss, grad) = softmax_cross_entropy(cache.output(), &yb);
            total += loss * batch.len() as f64;
            grads.fill(0.0);
            mlp.backward(&cache, &grad, &mut grads);
            match frozen {
                Some(mask) => sgd_step_masked(mlp, &grads, learning_rate, mask),
                None => sgd_step(mlp, &grads, learning_rate),
            }
        }
        history.push(check_loss(epoch, total / set.len() as f64)?);
    }
    Ok(())
}

/// Trains a fresh classifier. Initialization draws from stream 0 of
/// `cfg.seed`, batch order from stream 1.
pub fn train_classifier(set: &LabeledSet, arch: &ClassifierArch, cfg: &TrainConfig) -> Result<MlpClassifier> {
    arch.validate()?;
    cfg.validate()?;
    check_trainable(set)?;
    let mut init = rng::stream(cfg.seed, 0);
    let mut mlp = Mlp::new(
        &arch.sizes(set.features.width(), set.num_classes()),
        Activation::Relu,
        Activation::Identity,
        &mut init,
    );
    let mut loss_history = Vec::with_capacity(cfg.epochs);
    fit_epochs(&mut mlp, set, cfg, cfg.learning_rate, None, &mut loss_history)?;
    Ok(MlpClassifier {
        format_version: CLASSIFIER_FORMAT_VERSION,
        feature_names: set.features.names.clone(),
        class_names: set.class_names.clone(),
        mlp,
        train_config: cfg.clone(),
        loss_history,
        provenance: None,
    })
}

impl MlpClassifier {
    pub fn input_width(&self) -> usize {
        self.mlp.input_dim()
    }

    pub fn num_classes(&self) -> usize {
        self.mlp.output_dim()
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        let s = self.mlp.sizes();
        s[1..s.len() - 1].to_vec()
    }

    fn check_width(&self, width: usize) -> Result<()> {
        if width != self.input_width() {
            return Err(Error::Contract(format!(
                "classifier expects {} features, got {width}",
                self.input_width()
            )));
        }
        Ok(())
    }

    pub fn logits(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_width(x.ncols())?;
        Ok(self.mlp.forward(x))
    }

    /// Per-class probabilities, one row per sample.
    pub fn predict_proba(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        Ok(softmax(&self.logits(x)?))
    }

    pub fn predict(&self, x: &Array2<f64>) -> Result<Vec<usize>> {
        let logits = self.logits(x)?;
        Ok(logits
            .rows()
            .into_iter()
            .map(|r| argmax(&r.to_vec()))
            .collect())
    }

    pub fn evaluate(&self, set: &LabeledSet) -> Result<Evaluation> {
        if set.is_empty() {
            return Err(Error::Data("evaluation set is empty".into()));
        }
        if set.num_classes() != self.num_classes() {
            return Err(Error::Contract(format!(
                "classifier has {} classes, data has {}",
                self.num_classes(),
                set.num_classes()
            )));
        }
        let pred = self.predict(&set.features.data)?;
        let confusion = ConfusionMatrix::from_predictions(self.class_names.clone(), &set.labels, &pred)?;
        Ok(Evaluation {
            accuracy: confusion.accuracy(),
            confusion,
        })
    }

    /// Continues training from the current weights. With `freeze_hidden`
    /// only the output layer moves.
    pub fn fine_tune(&self, set: &LabeledSet, cfg: &TrainConfig, freeze_hidden: bool) -> Result<MlpClassifier> {
        cfg.validate()?;
        check_trainable(set)?;
        self.check_width(set.features.width())?;
        if set.num_classes() != self.num_classes() {
            return Err(Error::Contract(format!(
                "classifier has {} classes, data has {}",
                self.num_classes(),
                set.num_classes()
            )));
        }
        let mut out = self.clone();
        out.train_config = cfg.clone();
        out.loss_history.clear();
        // Two parameter blocks (weights, bias) per dense layer.
        let blocks = 2 * self.mlp.layers.len();
        let frozen: Vec<bool> = (0..blocks).map(|b| freeze_hidden && b + 2 < blocks).collect();
        fit_epochs(
            &mut out.mlp,
            set,
            cfg,
            cfg.learning_rate,
            Some(&frozen),
            &mut out.loss_history,
        )?;
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        check_version(&v, CLASSIFIER_FORMAT_VERSION, "classifier")?;
        let m: MlpClassifier = serde_json::from_value(v)?;
        m.check_consistent()?;
        Ok(m)
    }

    fn check_consistent(&self) -> Result<()> {
        if self.feature_names.len() != self.input_width() || self.class_names.len() != self.num_classes() {
            return Err(Error::Format(format!(
                "classifier has sizes {:?} but {} feature names and {} class names",
                self.mlp.sizes(),
                self.feature_names.len(),
                self.class_names.len()
            )));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        MlpClassifier::from_json(&text)
    }
}

pub(crate) fn check_version(v: &serde_json::Value, expected: u32, what: &str) -> Result<()> {
    match v.get("format_version").and_then(|f| f.as_u64()) {
        Some(f) if f == expected as u64 => Ok(()),
        Some(f) => Err(Error::Format(format!(
            "{what} format version {f} is not supported (expected {expected})"
        ))),
        None => Err(Error::Format(format!("{what} file has no format_version"))),
    }
}

pub(crate) fn short_hash(text: &str) -> String {
    hex(&Sha256::digest(text.as_bytes()))[..16].to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::finite_difference_check;
    use ndarray::array;
    use rand::Rng as _;
    use rand_distr::{Distribution, Normal};

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    /// Three Gaussian blobs centred on the corners of a triangle.
    fn blobs(per_class: usize, spread: f64, seed: u64) -> LabeledSet {
        let centres = [(0.0, 0.0), (4.0, 0.0), (2.0, 4.0)];
        let mut r = rng::seeded(seed);
        let noise = Normal::new(0.0, spread).unwrap();
        let mut data = Array2::zeros((3 * per_class, 2));
        let mut labels = Vec::new();
        for (c, (cx, cy)) in centres.iter().enumerate() {
            for i in 0..per_class {
                let row = c * per_class + i;
                data[[row, 0]] = cx + noise.sample(&mut r);
                data[[row, 1]] = cy + noise.sample(&mut r);
                labels.push(c);
            }
        }
        LabeledSet::new(
            FeatureMatrix::new(names(2), data).unwrap(),
            labels,
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap()
    }

    fn toy_classifier(sizes: &[usize], seed: u64) -> MlpClassifier {
        let mut r = rng::seeded(seed);
        let mlp = Mlp::new(sizes, Activation::Relu, Activation::Identity, &mut r);
        MlpClassifier {
            format_version: CLASSIFIER_FORMAT_VERSION,
            feature_names: names(sizes[0]),
            class_names: (0..*sizes.last().unwrap()).map(|i| format!("c{i}")).collect(),
            mlp,
            train_config: TrainConfig::default(),
            loss_history: vec![],
            provenance: None,
        }
    }

    #[test]
    fn softmax_identities() {
        let p = softmax(&array![[0.0, 0.0, 0.0], [5.0, 0.0, 0.0]]);
        for j in 0..3 {
            assert!((p[[0, j]] - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!(p[[1, 0]] > 0.98);
        let (loss, _) = softmax_cross_entropy(&array![[0.0, 0.0, 0.0]], &[2]);
        assert!((loss - 3f64.ln()).abs() < 1e-15);
        let (loss, _) = softmax_cross_entropy(&array![[60.0, 0.0, 0.0]], &[0]);
        assert!(loss < 1e-20);
    }

    #[test]
    fn argmax_prefers_lowest_index_and_ignores_shift() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[2.0, 2.0, 2.0]), 0);
        let m = toy_classifier(&[2, 4, 3], 3);
        let x = array![[0.3, -1.2], [2.0, 0.5]];
        let logits = m.logits(&x).unwrap();
        for row in logits.rows() {
            let v = row.to_vec();
            let shifted: Vec<f64> = v.iter().map(|a| a + 17.5).collect();
            assert_eq!(argmax(&v), argmax(&shifted));
        }
    }

    #[test]
    fn two_two_three_gradients_match_finite_differences() {
        let m = toy_classifier(&[2, 2, 3], 5);
        let x = array![[0.5, -1.0], [1.5, 0.3], [-0.7, 0.9], [0.1, 2.0]];
        let y = [0usize, 1, 2, 1];
        let cache = m.mlp.forward_cached(&x);
        let (_, g) = softmax_cross_entropy(cache.output(), &y);
        let mut grads = zeros_like(&m.mlp);
        m.mlp.backward(&cache, &g, &mut grads);
        let err = finite_difference_check(&m.mlp, &grads, 1e-5, 1e-8, |p| {
            softmax_cross_entropy(&p.forward(&x), &y).0
        });
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn separable_blobs_reach_99_percent() {
        let set = blobs(100, 0.3, 1);
        let cfg = TrainConfig {
            epochs: 50,
            batch_size: 10,
            learning_rate: 0.05,
            seed: 2,
        };
        let m = train_classifier(&set, &ClassifierArch::default(), &cfg).unwrap();
        assert_eq!(m.loss_history.len(), 50);
        let acc = m.evaluate(&set).unwrap().accuracy;
        assert!(acc >= 0.99, "{acc}");
    }

    #[test]
    fn probabilities_sum_to_one_and_width_checked() {
        let m = toy_classifier(&[3, 5, 3], 7);
        let mut r = rng::seeded(8);
        let x = Array2::from_shape_fn((20, 3), |_| r.random_range(-50.0..50.0));
        let p = m.predict_proba(&x).unwrap();
        for row in p.rows() {
            assert!(row.iter().all(|&v| v >= 0.0));
            assert!((row.sum() - 1.0).abs() < 1e-9);
        }
        assert!(matches!(m.predict(&Array2::zeros((1, 2))), Err(Error::Contract(_))));
    }

    #[test]
    fn evaluate_counts() {
        // Bias the output layer so every prediction is class 0.
        let mut m = toy_classifier(&[2, 3], 9);
        m.mlp.layers[0].w.fill(0.0);
        m.mlp.layers[0].b = array![1.0, 0.0, 0.0];
        let set = LabeledSet::new(
            FeatureMatrix::new(names(2), Array2::zeros((6, 2))).unwrap(),
            vec![0, 1, 2, 0, 1, 2],
            m.class_names.clone(),
        )
        .unwrap();
        let ev = m.evaluate(&set).unwrap();
        assert!((ev.accuracy - 1.0 / 3.0).abs() < 1e-15);
        let off: u64 = (0..3)
            .flat_map(|i| (0..3).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| ev.confusion.counts[i][j])
            .sum();
        assert!((ev.accuracy - (1.0 - off as f64 / ev.confusion.total() as f64)).abs() < 1e-15);
        for row in ev.confusion.row_normalized() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        m.mlp.layers[0].b = array![0.0, 0.0, 0.0];
        let perfect = LabeledSet::new(set.features.clone(), vec![0; 6], m.class_names.clone()).unwrap();
        let ev = m.evaluate(&perfect).unwrap();
        assert_eq!(ev.accuracy, 1.0);
        assert_eq!(ev.confusion.trace(), 6);
    }

    #[test]
    fn binary_relaxation() {
        assert_eq!(
            binary_relax(&[DefectLabel::Normal, DefectLabel::NearFailure, DefectLabel::Failure]),
            vec![0, 1, 1]
        );
        let set = LabeledSet::defect(
            FeatureMatrix::new(names(1), Array2::zeros((3, 1))).unwrap(),
            &[DefectLabel::Failure, DefectLabel::Normal, DefectLabel::NearFailure],
        )
        .unwrap();
        let b = binary_relax_set(&set).unwrap();
        assert_eq!(b.labels, vec![1, 0, 1]);
        assert_eq!(b.class_names, BINARY_CLASS_NAMES);
        assert!(binary_relax_set(&b).is_err());
    }

    #[test]
    fn training_is_deterministic_and_persists() {
        let set = blobs(30, 0.5, 3);
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 16,
            learning_rate: 0.01,
            seed: 4,
        };
        let a = train_classifier(&set, &ClassifierArch::default(), &cfg).unwrap();
        let b = train_classifier(&set, &ClassifierArch::default(), &cfg).unwrap();
        assert_eq!(a, b);
        let back = MlpClassifier::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(back, a);
        let bumped = a.to_json().unwrap().replacen("\"format_version\": 1", "\"format_version\": 9", 1);
        assert!(matches!(MlpClassifier::from_json(&bumped), Err(Error::Format(_))));
    }

    #[test]
    fn divergence_reports_epoch() {
        let set = blobs(20, 0.5, 5);
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 4,
            learning_rate: 1e12,
            seed: 1,
        };
        match train_classifier(&set, &ClassifierArch::default(), &cfg) {
            Err(Error::Diverged { epoch, .. }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn frozen_fine_tune_moves_only_the_output_layer() {
        let set = blobs(20, 0.5, 6);
        let m = toy_classifier(&[2, 6, 6, 3], 6);
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 8,
            learning_rate: 0.05,
            seed: 1,
        };
        let frozen = m.fine_tune(&set.relabel(m.class_names.clone(), |l| l).unwrap(), &cfg, true).unwrap();
        assert_eq!(frozen.mlp.layers[0], m.mlp.layers[0]);
        assert_eq!(frozen.mlp.layers[1], m.mlp.layers[1]);
        assert_ne!(frozen.mlp.layers[2], m.mlp.layers[2]);
        let zero = TrainConfig { epochs: 0, ..cfg };
        let same = m.fine_tune(&set.relabel(m.class_names.clone(), |l| l).unwrap(), &zero, false).unwrap();
        assert_eq!(same.mlp, m.mlp);
    }
}

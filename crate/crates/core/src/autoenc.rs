//! Autoencoder with a classification head for machine operating states,
//! trained on a weighted sum of reconstruction and cross-entropy losses.

use std::collections::BTreeSet;
use std::path::Path;

use chrono::NaiveDate;
use ndarray::{Array2, Axis as NdAxis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::classify::{argmax, check_version, LabeledSet, TrainConfig};
use crate::error::{Error, Result};
use crate::features::{FeatureEncoder, Normalization};
use crate::ingest::align_and_impute;
use crate::metrics::ConfusionMatrix;
use crate::nn::loss::{mse, softmax, softmax_cross_entropy};
use crate::nn::{check_loss, sgd_step, zeros_like, Activation, Mlp, MlpCache, Params};
use crate::rng::{self, Rng};
use crate::synth::{generate_process, plant_vibration, PlantVibrationConfig, ProcessSynthConfig};
use crate::types::MachineState;

pub const AUTOENC_FORMAT_VERSION: u32 = 1;

/// Which encoder layer feeds the classification head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadAttachment {
    /// The latent code.
    Latent,
    /// The first (wider) encoder layer.
    EncoderHidden,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AutoencArch {
    pub hidden: usize,
    pub latent: usize,
    pub head_hidden: usize,
    pub head_on: HeadAttachment,
}

impl Default for AutoencArch {
    fn default() -> Self {
        AutoencArch {
            hidden: 128,
            latent: 64,
            head_hidden: 128,
            head_on: HeadAttachment::Latent,
        }
    }
}

/// Encoder `in → hidden → latent`, decoder `latent → hidden → in` and head
/// `(latent | hidden) → head_hidden → classes`. Every layer but the decoder
/// and head outputs uses ReLU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencNet {
    pub enc_in: Mlp,
    pub enc_out: Mlp,
    pub decoder: Mlp,
    pub head: Mlp,
    pub head_on: HeadAttachment,
}

impl Params for AutoencNet {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        for m in [&self.enc_in, &self.enc_out, &self.decoder, &self.head] {
            m.visit(f);
        }
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        for m in [&mut self.enc_in, &mut self.enc_out, &mut self.decoder, &mut self.head] {
            m.visit_mut(f);
        }
    }
}

struct NetCache {
    enc_in: MlpCache,
    enc_out: MlpCache,
    decoder: MlpCache,
    head: MlpCache,
}

/// Per-batch loss parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub reconstruction: f64,
    pub classification: f64,
    pub total: f64,
}

impl AutoencNet {
    pub fn new(input: usize, classes: usize, arch: &AutoencArch, rng: &mut Rng) -> Self {
        let head_in = match arch.head_on {
            HeadAttachment::Latent => arch.latent,
            HeadAttachment::EncoderHidden => arch.hidden,
        };
        AutoencNet {
            enc_in: Mlp::new(&[input, arch.hidden], Activation::Relu, Activation::Relu, rng),
            enc_out: Mlp::new(&[arch.hidden, arch.latent], Activation::Relu, Activation::Relu, rng),
            decoder: Mlp::new(&[arch.latent, arch.hidden, input], Activation::Relu, Activation::Identity, rng),
            head: Mlp::new(&[head_in, arch.head_hidden, classes], Activation::Relu, Activation::Identity, rng),
            head_on: arch.head_on,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.enc_in.input_dim()
    }

    fn forward_cached(&self, x: &Array2<f64>) -> NetCache {
        let enc_in = self.enc_in.forward_cached(x);
        let enc_out = self.enc_out.forward_cached(enc_in.output());
        let decoder = self.decoder.forward_cached(enc_out.output());
        let head_input = match self.head_on {
            HeadAttachment::Latent => enc_out.output(),
            HeadAttachment::EncoderHidden => enc_in.output(),
        };
        let head = self.head.forward_cached(head_input);
        NetCache {
            enc_in,
            enc_out,
            decoder,
            head,
        }
    }

    /// Reconstruction and class logits.
    pub fn forward(&self, x: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        let c = self.forward_cached(x);
        (c.decoder.output().clone(), c.head.output().clone())
    }

    /// `alpha · MSE(reconstruction, x) + (1 − alpha) · CE(logits, labels)`.
    pub fn loss(&self, x: &Array2<f64>, labels: &[usize], alpha: f64) -> LossParts {
        let (recon, logits) = self.forward(x);
        let (r, _) = mse(&recon, x);
        let (c, _) = softmax_cross_entropy(&logits, labels);
        LossParts {
            reconstruction: r,
            classification: c,
            total: alpha * r + (1.0 - alpha) * c,
        }
    }

    pub fn loss_and_grad(&self, x: &Array2<f64>, labels: &[usize], alpha: f64) -> (LossParts, AutoencNet) {
        let cache = self.forward_cached(x);
        let (r, g_recon) = mse(cache.decoder.output(), x);
        let (c, g_logits) = softmax_cross_entropy(cache.head.output(), labels);
        let mut grads = zeros_like(self);
        let d_latent = self.decoder.backward(&cache.decoder, &(g_recon * alpha), &mut grads.decoder);
        let d_head_in = self.head.backward(&cache.head, &(g_logits * (1.0 - alpha)), &mut grads.head);
        let (d_latent, extra_hidden) = match self.head_on {
            HeadAttachment::Latent => (d_latent + &d_head_in, None),
            HeadAttachment::EncoderHidden => (d_latent, Some(d_head_in)),
        };
        let mut d_hidden = self.enc_out.backward(&cache.enc_out, &d_latent, &mut grads.enc_out);
        if let Some(extra) = extra_hidden {
            d_hidden += &extra;
        }
        self.enc_in.backward(&cache.enc_in, &d_hidden, &mut grads.enc_in);
        let parts = LossParts {
            reconstruction: r,
            classification: c,
            total: alpha * r + (1.0 - alpha) * c,
        };
        (parts, grads)
    }
}

/// Per-epoch means of both losses and their weighted sum.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossCurves {
    pub reconstruction: Vec<f64>,
    pub classification: Vec<f64>,
    pub total: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencClassifier {
    pub format_version: u32,
    pub class_names: Vec<String>,
    /// Z-score statistics of the training features, applied before the net.
    pub input_encoder: FeatureEncoder,
    pub arch: AutoencArch,
    pub alpha: f64,
    pub net: AutoencNet,
    pub train_config: TrainConfig,
    pub curves: LossCurves,
}

/// Defaults for the operating-state model: 30 epochs of batch 32 at rate 0.01.
pub fn default_train_config() -> TrainConfig {
    TrainConfig {
        epochs: 30,
        batch_size: 32,
        learning_rate: 0.01,
        seed: 0,
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

/// Trains on z-scored features. Initialization uses stream 0 of the seed,
/// batch order stream 1.
pub fn train_autoenc_classifier(
    set: &LabeledSet,
    arch: &AutoencArch,
    alpha: f64,
    cfg: &TrainConfig,
) -> Result<AutoencClassifier> {
    check_alpha(alpha)?;
    cfg.validate()?;
    if [arch.hidden, arch.latent, arch.head_hidden].contains(&0) {
        return Err(Error::Config(format!("layer widths must be positive: {arch:?}")));
    }
    if set.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    if set.features.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("training features contain non-finite values".into()));
    }
    let input_encoder = FeatureEncoder::fit_matrix(&set.features, Normalization::ZScore)?;
    let x = input_encoder.transform(&set.features)?.data;
    let mut net = AutoencNet::new(x.ncols(), set.num_classes(), arch, &mut rng::stream(cfg.seed, 0));
    let mut shuffle = rng::stream(cfg.seed, 1);
    let mut order: Vec<usize> = (0..set.len()).collect();
    let mut curves = LossCurves::default();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle);
        let (mut r, mut c, mut t) = (0.0, 0.0, 0.0);
        for batch in order.chunks(cfg.batch_size) {
            let xb = x.select(NdAxis(0), batch);
            let yb: Vec<usize> = batch.iter().map(|&i| set.labels[i]).collect();
            let (parts, grads) = net.loss_and_grad(&xb, &yb, alpha);
            let w = batch.len() as f64;
            r += parts.reconstruction * w;
            c += parts.classification * w;
            t += parts.total * w;
            sgd_step(&mut net, &grads, cfg.learning_rate);
        }
        let n = set.len() as f64;
        curves.total.push(check_loss(epoch, t / n)?);
        curves.reconstruction.push(r / n);
        curves.classification.push(c / n);
    }
    Ok(AutoencClassifier {
        format_version: AUTOENC_FORMAT_VERSION,
        class_names: set.class_names.clone(),
        input_encoder,
        arch: arch.clone(),
        alpha,
        net,
        train_config: cfg.clone(),
        curves,
    })
}

impl AutoencClassifier {
    pub fn input_width(&self) -> usize {
        self.input_encoder.input_width()
    }

    pub fn predict_proba(&self, features: &crate::features::FeatureMatrix) -> Result<Array2<f64>> {
        let x = self.input_encoder.transform(features)?.data;
        Ok(softmax(&self.net.forward(&x).1))
    }

    /// Most probable state of one raw feature row, with all three probabilities.
    pub fn classify_state(&self, row: &[f64]) -> Result<(MachineState, Vec<f64>)> {
        let encoded = self.input_encoder.transform_row(row)?;
        let x = Array2::from_shape_vec((1, encoded.len()), encoded)
            .map_err(|e| Error::Invariant(format!("row shape: {e}")))?;
        let p = softmax(&self.net.forward(&x).1).row(0).to_vec();
        let state = MachineState::from_code(argmax(&p))
            .ok_or_else(|| Error::Invariant(format!("head has {} outputs, not 3", p.len())))?;
        Ok((state, p))
    }

    pub fn evaluate(&self, set: &LabeledSet) -> Result<crate::classify::Evaluation> {
        if set.is_empty() {
            return Err(Error::Data("evaluation set is empty".into()));
        }
        let p = self.predict_proba(&set.features)?;
        let pred: Vec<usize> = p.rows().into_iter().map(|r| argmax(&r.to_vec())).collect();
        let confusion = ConfusionMatrix::from_predictions(self.class_names.clone(), &set.labels, &pred)?;
        Ok(crate::classify::Evaluation {
            accuracy: confusion.accuracy(),
            confusion,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        check_version(&v, AUTOENC_FORMAT_VERSION, "autoencoder classifier")?;
        Ok(serde_json::from_value(v)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        AutoencClassifier::from_json(&text)
    }
}

/// Synthetic plant run: process rows for `days` days from Tuesday
/// 2021-07-27, one vibration window per row, aligned into 15 time-domain
/// features plus the process columns and labelled Off/On/Abnormal.
pub fn synthetic_state_dataset(days: u32, failure_days: &BTreeSet<NaiveDate>, seed: u64) -> Result<LabeledSet> {
    let rows = generate_process(&ProcessSynthConfig::new(days, failure_days.clone(), rng::child_seed(seed, 0)))?;
    let vib = plant_vibration(
        &rows,
        &PlantVibrationConfig {
            seed: rng::child_seed(seed, 1),
            ..PlantVibrationConfig::default()
        },
    )?;
    let aligned = align_and_impute(&vib, &rows)?;
    LabeledSet::new(
        aligned.to_feature_matrix()?,
        aligned.state_codes(),
        MachineState::ALL.iter().map(|s| s.name().to_string()).collect(),
    )
}

/// One week with the excursion on Wednesday 2021-07-28.
pub fn default_state_dataset(seed: u64) -> Result<LabeledSet> {
    let cfg = ProcessSynthConfig::new(7, BTreeSet::new(), 0);
    synthetic_state_dataset(7, &[cfg.day(1)].into_iter().collect(), seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{train_classifier, ClassifierArch};
    use crate::features::FeatureMatrix;
    use crate::nn::finite_difference_check;
    use ndarray::array;

    fn tiny_arch(head_on: HeadAttachment) -> AutoencArch {
        AutoencArch {
            hidden: 5,
            latent: 3,
            head_hidden: 4,
            head_on,
        }
    }

    fn tiny_batch() -> (Array2<f64>, Vec<usize>) {
        (
            array![
                [0.5, -1.0, 0.3, 1.2],
                [1.5, 0.3, -0.4, 0.1],
                [-0.7, 0.9, 1.1, -0.6],
                [0.1, 2.0, -1.3, 0.8],
                [-1.1, -0.2, 0.6, 0.4]
            ],
            vec![0, 1, 2, 1, 0],
        )
    }

    fn random_net(head_on: HeadAttachment, seed: u64) -> AutoencNet {
        let mut r = rng::seeded(seed);
        let mut net = AutoencNet::new(4, 3, &tiny_arch(head_on), &mut r);
        // Nonzero biases keep ReLU pre-activations off the kink at 0.
        let mut r2 = rng::seeded(seed + 100);
        let flat: Vec<f64> = net.flat().iter().map(|_| rand::Rng::random_range(&mut r2, -0.8..0.8)).collect();
        net.set_flat(&flat);
        net
    }

    #[test]
    fn joint_gradient_matches_finite_differences() {
        let (x, y) = tiny_batch();
        for head_on in [HeadAttachment::Latent, HeadAttachment::EncoderHidden] {
            for alpha in [0.0, 0.3, 1.0] {
                let net = random_net(head_on, 3);
                let (_, g) = net.loss_and_grad(&x, &y, alpha);
                let err = finite_difference_check(&net, &g, 1e-5, 1e-8, |n| n.loss(&x, &y, alpha).total);
                assert!(err < 1e-4, "{head_on:?} alpha {alpha}: {err}");
            }
        }
    }

    #[test]
    fn loss_weight_identities_are_exact() {
        let (x, y) = tiny_batch();
        let net = random_net(HeadAttachment::Latent, 4);
        let (_, g1) = net.loss_and_grad(&x, &y, 1.0);
        assert!(g1.head.flat().iter().all(|&v| v == 0.0));
        assert!(g1.decoder.flat().iter().any(|&v| v != 0.0));
        let (_, g0) = net.loss_and_grad(&x, &y, 0.0);
        assert!(g0.decoder.flat().iter().all(|&v| v == 0.0));
        assert!(g0.head.flat().iter().any(|&v| v != 0.0));
    }

    #[test]
    fn alpha_outside_unit_interval_is_rejected() {
        let set = LabeledSet::new(
            FeatureMatrix::new(vec!["a".into()], Array2::zeros((3, 1))).unwrap(),
            vec![0, 1, 2],
            vec!["off".into(), "on".into(), "abnormal".into()],
        )
        .unwrap();
        assert!(train_autoenc_classifier(&set, &AutoencArch::default(), 1.5, &default_train_config()).is_err());
    }

    #[test]
    fn synthetic_plant_week() {
        let set = default_state_dataset(1).unwrap();
        assert_eq!(set.len(), 7 * 288);
        assert_eq!(set.features.width(), 15 + 7);
        let counts = set.class_counts();
        assert_eq!(counts[MachineState::Abnormal.code()], 288);
        assert!(counts[MachineState::Off.code()] > 500);
        let (train, test) = set.split(0.7, 2).unwrap();
        let cfg = TrainConfig {
            epochs: 10,
            ..default_train_config()
        };
        let model = train_autoenc_classifier(&train, &AutoencArch::default(), 0.5, &cfg).unwrap();
        assert_eq!(model.curves.reconstruction.len(), 10);
        assert_eq!(model.curves.classification.len(), 10);
        let ev = model.evaluate(&test).unwrap();
        let off = MachineState::Off.code();
        let recall = ev.confusion.counts[off][off] as f64 / ev.confusion.support()[off] as f64;
        assert!(recall >= 0.95, "off recall {recall}");
        let row = test.features.data.row(0).to_vec();
        let (state, p) = model.classify_state(&row).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(model.classify_state(&row).unwrap(), (state, p));
        assert!(model.classify_state(&row[1..]).is_err());
        assert_eq!(AutoencClassifier::from_json(&model.to_json().unwrap()).unwrap(), model);
    }

    #[test]
    fn reconstruction_falls_in_early_epochs() {
        let set = default_state_dataset(5).unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            ..default_train_config()
        };
        let m = train_autoenc_classifier(&set, &AutoencArch::default(), 1.0, &cfg).unwrap();
        let r = &m.curves.reconstruction;
        assert!(r[0] > r[1] && r[1] > r[2], "{r:?}");
    }

    #[test]
    fn pure_classifier_matches_plain_mlp() {
        let set = default_state_dataset(7).unwrap();
        let (train, test) = set.split(0.7, 8).unwrap();
        let cfg = default_train_config();
        let ae = train_autoenc_classifier(&train, &AutoencArch::default(), 0.0, &cfg).unwrap();
        let ae_acc = ae.evaluate(&test).unwrap().accuracy;
        let enc = FeatureEncoder::fit_matrix(&train.features, Normalization::ZScore).unwrap();
        let encode = |s: &LabeledSet| LabeledSet::new(enc.transform(&s.features).unwrap(), s.labels.clone(), s.class_names.clone()).unwrap();
        let plain = train_classifier(
            &encode(&train),
            &ClassifierArch {
                hidden: vec![128, 64, 128],
            },
            &cfg,
        )
        .unwrap();
        let plain_acc = plain.evaluate(&encode(&test)).unwrap().accuracy;
        assert!((ae_acc - plain_acc).abs() <= 0.02, "{ae_acc} vs {plain_acc}");
    }
}

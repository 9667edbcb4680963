//! Sharing a trained classifier and its feature encoder with a second sensor.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_version, short_hash, LabeledSet, MlpClassifier, TrainConfig};
use crate::error::{Error, Result};
use crate::features::FeatureEncoder;

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_dataset: String,
    /// First 16 hex digits of SHA-256 over the source training setup.
    pub config_hash: String,
}

/// A source model together with the encoder its inputs went through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferBundle {
    pub format_version: u32,
    pub model: MlpClassifier,
    pub encoder: FeatureEncoder,
    pub provenance: Provenance,
}

impl TransferBundle {
    pub fn new(model: MlpClassifier, encoder: FeatureEncoder, source_dataset: impl Into<String>) -> Result<Self> {
        if encoder.output_width() != model.input_width() {
            return Err(Error::Contract(format!(
                "encoder yields {} features but the model takes {}",
                encoder.output_width(),
                model.input_width()
            )));
        }
        let setup = serde_json::json!({
            "sizes": model.mlp.sizes(),
            "train_config": model.train_config,
            "encoder": encoder.to_text(),
        });
        let provenance = Provenance {
            source_dataset: source_dataset.into(),
            config_hash: short_hash(&setup.to_string()),
        };
        Ok(TransferBundle {
            format_version: BUNDLE_FORMAT_VERSION,
            model,
            encoder,
            provenance,
        })
    }

    /// Encodes raw features with the bundle's encoder, keeping the labels.
    pub fn encode(&self, set: &LabeledSet) -> Result<LabeledSet> {
        LabeledSet::new(
            self.encoder.transform(&set.features)?,
            set.labels.clone(),
            set.class_names.clone(),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        check_version(&v, BUNDLE_FORMAT_VERSION, "model bundle")?;
        let b: TransferBundle = serde_json::from_value(v)?;
        if b.encoder.output_width() != b.model.input_width() {
            return Err(Error::Format(format!(
                "bundle encoder yields {} features but its model takes {}",
                b.encoder.output_width(),
                b.model.input_width()
            )));
        }
        Ok(b)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TransferBundle::from_json(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransferOptions {
    /// Fine-tuning rate as a multiple of the configured rate.
    pub lr_scale: f64,
    /// Train only the output layer.
    pub freeze_hidden: bool,
}

impl Default for TransferOptions {
    fn default() -> Self {
        TransferOptions {
            lr_scale: 0.1,
            freeze_hidden: false,
        }
    }
}

/// DNN-TL: starts from the bundle's weights and fine-tunes on target data
/// passed through the bundle's (frozen) encoder. `target` holds raw features.
pub fn train_transfer(
    bundle: &TransferBundle,
    target: &LabeledSet,
    cfg: &TrainConfig,
    opts: &TransferOptions,
) -> Result<MlpClassifier> {
    if !(opts.lr_scale > 0.0 && opts.lr_scale.is_finite()) {
        return Err(Error::Config(format!("lr scale must be positive, got {}", opts.lr_scale)));
    }
    if target.class_names != bundle.model.class_names {
        return Err(Error::Data(format!(
            "target classes {:?} differ from source classes {:?}",
            target.class_names, bundle.model.class_names
        )));
    }
    let encoded = bundle.encode(target)?;
    let tuned_cfg = TrainConfig {
        learning_rate: cfg.learning_rate * opts.lr_scale,
        ..cfg.clone()
    };
    let mut model = bundle.model.fine_tune(&encoded, &tuned_cfg, opts.freeze_hidden)?;
    model.provenance = Some(bundle.provenance.clone());
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{train_classifier, ClassifierArch};
    use crate::features::{FeatureMatrix, Normalization};
    use ndarray::Array2;

    fn set(seed: u64, offset: f64) -> LabeledSet {
        let n = 60;
        let data = Array2::from_shape_fn((n, 3), |(i, j)| {
            let c = (i % 3) as f64;
            offset + 2.0 * c + 0.1 * ((i * 7 + j * 13 + seed as usize) % 11) as f64
        });
        LabeledSet::new(
            FeatureMatrix::new(vec!["x".into(), "y".into(), "z".into()], data).unwrap(),
            (0..n).map(|i| i % 3).collect(),
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap()
    }

    fn bundle() -> (TransferBundle, LabeledSet) {
        let src = set(1, 0.0);
        let enc = FeatureEncoder::fit_matrix(&src.features, Normalization::ZScore)
            .unwrap()
            .keep_only(&["x", "z"])
            .unwrap();
        let encoded = LabeledSet::new(enc.transform(&src.features).unwrap(), src.labels.clone(), src.class_names.clone()).unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 10,
            learning_rate: 0.05,
            seed: 3,
        };
        let model = train_classifier(&encoded, &ClassifierArch::default(), &cfg).unwrap();
        (TransferBundle::new(model, enc, "source").unwrap(), src)
    }

    #[test]
    fn zero_epochs_reproduces_source_predictions() {
        let (b, _) = bundle();
        let target = set(2, 0.5);
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let tl = train_transfer(&b, &target, &cfg, &TransferOptions::default()).unwrap();
        assert_eq!(tl.mlp, b.model.mlp);
        let x = b.encode(&target).unwrap().features.data;
        assert_eq!(tl.predict(&x).unwrap(), b.model.predict(&x).unwrap());
        assert_eq!(tl.provenance.as_ref(), Some(&b.provenance));
        assert_eq!(b.provenance.config_hash.len(), 16);
    }

    #[test]
    fn fine_tuning_changes_weights_and_round_trips() {
        let (b, _) = bundle();
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 10,
            learning_rate: 0.05,
            seed: 1,
        };
        let tl = train_transfer(&b, &set(3, 0.2), &cfg, &TransferOptions::default()).unwrap();
        assert_ne!(tl.mlp, b.model.mlp);
        assert_eq!(tl.loss_history.len(), 2);
        assert_eq!(TransferBundle::from_json(&b.to_json().unwrap()).unwrap(), b);
    }

    #[test]
    fn mismatches_are_rejected() {
        let (b, src) = bundle();
        let renamed = LabeledSet::new(
            FeatureMatrix::new(vec!["p".into(), "q".into(), "r".into()], src.features.data.clone()).unwrap(),
            src.labels.clone(),
            src.class_names.clone(),
        )
        .unwrap();
        assert!(train_transfer(&b, &renamed, &TrainConfig::default(), &TransferOptions::default()).is_err());
        let wide = FeatureEncoder::fit_matrix(&src.features, Normalization::ZScore).unwrap();
        assert!(matches!(
            TransferBundle::new(b.model.clone(), wide, "s"),
            Err(Error::Contract(_))
        ));
    }
}

//! TOML run configuration: a few flat sections whose keys are checked
//! against the known set, so typos fail loudly with a suggestion.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

/// Known keys per section; the empty section name holds the top-level keys.
const KNOWN: &[(&str, &[&str])] = &[
    ("", &["seed", "jobs", "datasets", "models", "detection", "training"]),
    (
        "datasets",
        &[
            "names",
            "train_fraction",
            "rpm",
            "rpms",
            "per_class",
            "target_per_class",
            "noise_sigma",
            "amplitude_exponent",
            "axes",
            "days",
            "failure_days",
        ],
    ),
    ("models", &["kinds", "params"]),
    ("detection", &["lambda", "two_sided", "epsilon_scale"]),
    (
        "training",
        &[
            "epochs",
            "batch_size",
            "learning_rate",
            "hidden",
            "normalization",
            "augment",
            "lr_scale",
            "freeze_hidden",
            "binary",
            "alpha",
            "head_on",
            "mode",
            "steps",
        ],
    ),
];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub datasets: DatasetsSection,
    pub models: ModelsSection,
    pub detection: DetectionSection,
    pub training: TrainingSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetsSection {
    pub names: Option<Vec<String>>,
    pub train_fraction: Option<f64>,
    pub rpm: Option<u32>,
    pub rpms: Option<Vec<u32>>,
    pub per_class: Option<usize>,
    pub target_per_class: Option<usize>,
    pub noise_sigma: Option<f64>,
    pub amplitude_exponent: Option<f64>,
    pub axes: Option<String>,
    pub days: Option<u32>,
    pub failure_days: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelsSection {
    pub kinds: Option<Vec<String>>,
    /// `kind.key=value` entries.
    pub params: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionSection {
    pub lambda: Option<f64>,
    pub two_sided: Option<bool>,
    pub epsilon_scale: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub hidden: Option<Vec<usize>>,
    pub normalization: Option<String>,
    pub augment: Option<usize>,
    pub lr_scale: Option<f64>,
    pub freeze_hidden: Option<bool>,
    pub binary: Option<bool>,
    pub alpha: Option<f64>,
    pub head_on: Option<String>,
    pub mode: Option<String>,
    pub steps: Option<Vec<String>>,
}

fn suggest(word: &str, candidates: &[&str]) -> Option<String> {
    candidates
        .iter()
        .map(|c| (strsim::jaro_winkler(word, c), *c))
        .filter(|(score, _)| *score > 0.8)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, c)| c.to_string())
}

fn unknown_key(section: &str, key: &str, known: &[&str]) -> CliError {
    let full = if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    };
    let hint = suggest(key, known)
        .map(|s| format!(" (did you mean \"{s}\"?)"))
        .unwrap_or_default();
    CliError::Usage(format!("unknown config key '{full}'{hint}"))
}

fn known(section: &str) -> &'static [&'static str] {
    KNOWN
        .iter()
        .find(|(s, _)| *s == section)
        .map(|(_, k)| *k)
        .unwrap_or(&[])
}

/// Checks every key before typed decoding so typos get a suggestion.
fn check_keys(table: &toml::Table) -> Result<(), CliError> {
    for (key, value) in table {
        if !known("").contains(&key.as_str()) {
            return Err(unknown_key("", key, known("")));
        }
        if let toml::Value::Table(inner) = value {
            for k in inner.keys() {
                if !known(key).contains(&k.as_str()) {
                    return Err(unknown_key(key, k, known(key)));
                }
            }
        }
    }
    Ok(())
}

pub fn parse_config(text: &str, source: &str) -> Result<FileConfig, CliError> {
    let table: toml::Table =
        toml::from_str(text).map_err(|e| CliError::Usage(format!("{source}: {}", e.message())))?;
    check_keys(&table)?;
    FileConfig::deserialize(toml::Value::Table(table))
        .map_err(|e| CliError::Usage(format!("{source}: {}", e.message())))
}

pub fn load_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
            parse_config(&text, &p.display().to_string())
        }
    }
}

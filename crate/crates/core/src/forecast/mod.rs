//! One-step-ahead forecasters: seasonal naive, autoregression, ARIMA(p, d, 0),
//! a regression forest and five gradient-trained networks.
//!
//! Classical models and the forest work on raw values. Networks are fitted on
//! the z-scored training split and their forecasts are mapped back.

pub mod classical;
pub mod forest;
pub mod neural;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::RecurrentKind;
use crate::rng;
use crate::types::TimeSeries;

pub use classical::{Arima, AutoRegression, SeasonalNaive, RIDGE_JITTER};
pub use forest::{lag_matrix, ForestParams, RandomForest};
pub use neural::{
    train_window_net, windows_of, ConvAutoencoderNet, GaussianNet, MlpNet, Normalizer, RecurrentNet, TrainSettings,
    WindowNet,
};

pub const FORECAST_FORMAT_VERSION: u32 = 1;

/// Rows per forward pass during rolling evaluation of a network.
const PREDICT_BATCH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    SeasonalNaive,
    AutoRegression,
    Arima,
    RandomForest,
    Mlp,
    Rnn,
    Lstm,
    AutoencoderForecaster,
    GaussianRnn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 9] = [
        ModelKind::SeasonalNaive,
        ModelKind::AutoRegression,
        ModelKind::Arima,
        ModelKind::RandomForest,
        ModelKind::Mlp,
        ModelKind::Rnn,
        ModelKind::Lstm,
        ModelKind::AutoencoderForecaster,
        ModelKind::GaussianRnn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::SeasonalNaive => "seasonal_naive",
            ModelKind::AutoRegression => "auto_regression",
            ModelKind::Arima => "arima",
            ModelKind::RandomForest => "random_forest",
            ModelKind::Mlp => "mlp",
            ModelKind::Rnn => "rnn",
            ModelKind::Lstm => "lstm",
            ModelKind::AutoencoderForecaster => "autoencoder_forecaster",
            ModelKind::GaussianRnn => "gaussian_rnn",
        }
    }

    pub fn is_neural(self) -> bool {
        matches!(
            self,
            ModelKind::Mlp | ModelKind::Rnn | ModelKind::Lstm | ModelKind::AutoencoderForecaster | ModelKind::GaussianRnn
        )
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        let alias = match key.as_str() {
            "naive" | "seasonal" => "seasonal_naive",
            "ar" | "autoregression" => "auto_regression",
            "rf" | "forest" => "random_forest",
            "dnn" => "mlp",
            "autoencoder" | "ae" => "autoencoder_forecaster",
            "deepar" | "gaussian" => "gaussian_rnn",
            other => other,
        };
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == alias)
            .ok_or_else(|| {
                let names: Vec<&str> = ModelKind::ALL.iter().map(|k| k.name()).collect();
                Error::Config(format!("unknown model '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeasonalNaiveParams {
    pub m: usize,
}

impl Default for SeasonalNaiveParams {
    fn default() -> Self {
        SeasonalNaiveParams { m: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AutoRegressionParams {
    pub p: usize,
    pub intercept: bool,
}

impl Default for AutoRegressionParams {
    fn default() -> Self {
        AutoRegressionParams { p: 10, intercept: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArimaParams {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl Default for ArimaParams {
    fn default() -> Self {
        ArimaParams { p: 10, d: 1, q: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpParams {
    pub window: usize,
    pub layers: usize,
    pub neurons: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            window: 10,
            layers: 3,
            neurons: 50,
            learning_rate: 0.01,
            batch_size: 10,
            epochs: 5,
        }
    }
}

/// Shared by the Elman and LSTM forecasters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecurrentParams {
    pub window: usize,
    pub hidden: usize,
    pub layers: usize,
    /// Width of the ReLU layer between the last hidden state and the output; 0 for none.
    pub head: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub clip_norm: f64,
}

impl RecurrentParams {
    pub fn rnn() -> Self {
        RecurrentParams {
            window: 10,
            hidden: 100,
            layers: 2,
            head: 0,
            learning_rate: 0.01,
            batch_size: 10,
            epochs: 5,
            clip_norm: 5.0,
        }
    }

    pub fn lstm() -> Self {
        RecurrentParams {
            window: 10,
            hidden: 20,
            layers: 4,
            head: 10,
            learning_rate: 0.005,
            ..RecurrentParams::rnn()
        }
    }
}

impl Default for RecurrentParams {
    fn default() -> Self {
        RecurrentParams::rnn()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AutoencoderParams {
    pub window: usize,
    pub filters: usize,
    pub layers: usize,
    pub kernel: usize,
    pub stride: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl Default for AutoencoderParams {
    fn default() -> Self {
        AutoencoderParams {
            window: 16,
            filters: 32,
            layers: 3,
            kernel: 7,
            stride: 2,
            dropout: 0.2,
            learning_rate: 0.01,
            batch_size: 10,
            epochs: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianRnnParams {
    pub window: usize,
    pub cells: usize,
    pub layers: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub clip_norm: f64,
}

impl Default for GaussianRnnParams {
    fn default() -> Self {
        GaussianRnnParams {
            window: 10,
            cells: 30,
            layers: 3,
            learning_rate: 0.005,
            batch_size: 10,
            epochs: 5,
            clip_norm: 5.0,
        }
    }
}

/// Model family plus its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    SeasonalNaive(SeasonalNaiveParams),
    AutoRegression(AutoRegressionParams),
    Arima(ArimaParams),
    RandomForest(ForestParams),
    Mlp(MlpParams),
    Rnn(RecurrentParams),
    Lstm(RecurrentParams),
    AutoencoderForecaster(AutoencoderParams),
    GaussianRnn(GaussianRnnParams),
}

fn positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::Config(format!("{name} must be at least 1")));
    }
    Ok(())
}

fn positive_rate(v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Config(format!("learning_rate must be positive, got {v}")));
    }
    Ok(())
}

impl ModelSpec {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::SeasonalNaive => ModelSpec::SeasonalNaive(SeasonalNaiveParams::default()),
            ModelKind::AutoRegression => ModelSpec::AutoRegression(AutoRegressionParams::default()),
            ModelKind::Arima => ModelSpec::Arima(ArimaParams::default()),
            ModelKind::RandomForest => ModelSpec::RandomForest(ForestParams::default()),
            ModelKind::Mlp => ModelSpec::Mlp(MlpParams::default()),
            ModelKind::Rnn => ModelSpec::Rnn(RecurrentParams::rnn()),
            ModelKind::Lstm => ModelSpec::Lstm(RecurrentParams::lstm()),
            ModelKind::AutoencoderForecaster => ModelSpec::AutoencoderForecaster(AutoencoderParams::default()),
            ModelKind::GaussianRnn => ModelSpec::GaussianRnn(GaussianRnnParams::default()),
        }
    }

    /// Defaults for `kind` with `overrides` applied. Values are read as JSON
    /// scalars (`10`, `0.005`, `true`); unknown keys are rejected.
    pub fn from_pairs(kind: ModelKind, overrides: &BTreeMap<String, String>) -> Result<Self> {
        let mut value = serde_json::to_value(ModelSpec::default_for(kind))?;
        let obj = value.as_object_mut().expect("specs serialize as objects");
        for (key, raw) in overrides {
            if key == "model" || !obj.contains_key(key) {
                let known: Vec<&str> = obj.keys().filter(|k| *k != "model").map(String::as_str).collect();
                return Err(Error::Config(format!(
                    "unknown hyperparameter '{key}' for {kind} (expected one of {})",
                    known.join(", ")
                )));
            }
            let parsed: serde_json::Value = serde_json::from_str(raw.trim())
                .map_err(|_| Error::Config(format!("{kind}.{key}: cannot parse '{raw}'")))?;
            obj.insert(key.clone(), parsed);
        }
        let spec: ModelSpec = serde_json::from_value(value)
            .map_err(|e| Error::Config(format!("{kind}: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::SeasonalNaive(_) => ModelKind::SeasonalNaive,
            ModelSpec::AutoRegression(_) => ModelKind::AutoRegression,
            ModelSpec::Arima(_) => ModelKind::Arima,
            ModelSpec::RandomForest(_) => ModelKind::RandomForest,
            ModelSpec::Mlp(_) => ModelKind::Mlp,
            ModelSpec::Rnn(_) => ModelKind::Rnn,
            ModelSpec::Lstm(_) => ModelKind::Lstm,
            ModelSpec::AutoencoderForecaster(_) => ModelKind::AutoencoderForecaster,
            ModelSpec::GaussianRnn(_) => ModelKind::GaussianRnn,
        }
    }

    /// Hyperparameters as a flat `key=value` list, in field order.
    pub fn describe(&self) -> String {
        let v = serde_json::to_value(self).expect("specs serialize");
        v.as_object()
            .expect("object")
            .iter()
            .filter(|(k, _)| *k != "model")
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::SeasonalNaive(p) => positive("seasonal naive m", p.m),
            ModelSpec::AutoRegression(p) => positive("autoregression p", p.p),
            ModelSpec::Arima(p) => {
                positive("ARIMA p", p.p)?;
                if p.q > 0 {
                    return Err(Error::Unsupported(format!(
                        "ARIMA q = {}: MA terms unsupported (only q = 0 is implemented)",
                        p.q
                    )));
                }
                if p.d > 1 {
                    return Err(Error::Unsupported(format!("ARIMA d = {}: only d ∈ {{0, 1}} is supported", p.d)));
                }
                Ok(())
            }
            ModelSpec::RandomForest(p) => {
                positive("n_trees", p.n_trees)?;
                positive("max_depth", p.max_depth)?;
                positive("lag_window", p.lag_window)
            }
            ModelSpec::Mlp(p) => {
                positive("window", p.window)?;
                positive("layers", p.layers)?;
                positive("neurons", p.neurons)?;
                positive("batch_size", p.batch_size)?;
                positive("epochs", p.epochs)?;
                positive_rate(p.learning_rate)
            }
            ModelSpec::Rnn(p) | ModelSpec::Lstm(p) => {
                if p.window < 2 {
                    return Err(Error::Config(format!("recurrent window must be at least 2, got {}", p.window)));
                }
                positive("hidden", p.hidden)?;
                positive("layers", p.layers)?;
                positive("batch_size", p.batch_size)?;
                positive("epochs", p.epochs)?;
                positive_rate(p.learning_rate)?;
                if !(p.clip_norm > 0.0) {
                    return Err(Error::Config("clip_norm must be positive".into()));
                }
                Ok(())
            }
            ModelSpec::AutoencoderForecaster(p) => {
                if p.window < 8 {
                    return Err(Error::Config(format!(
                        "autoencoder window must be at least 8, got {}",
                        p.window
                    )));
                }
                positive("filters", p.filters)?;
                positive("layers", p.layers)?;
                positive("kernel", p.kernel)?;
                positive("stride", p.stride)?;
                positive("batch_size", p.batch_size)?;
                positive("epochs", p.epochs)?;
                positive_rate(p.learning_rate)?;
                if !(0.0..1.0).contains(&p.dropout) {
                    return Err(Error::Config(format!("dropout must lie in [0, 1), got {}", p.dropout)));
                }
                Ok(())
            }
            ModelSpec::GaussianRnn(p) => {
                if p.window < 2 {
                    return Err(Error::Config(format!("recurrent window must be at least 2, got {}", p.window)));
                }
                positive("cells", p.cells)?;
                positive("layers", p.layers)?;
                positive("batch_size", p.batch_size)?;
                positive("epochs", p.epochs)?;
                positive_rate(p.learning_rate)?;
                if !(p.clip_norm > 0.0) {
                    return Err(Error::Config("clip_norm must be positive".into()));
                }
                Ok(())
            }
        }
    }

    /// Values of history a one-step forecast reads.
    pub fn min_context(&self) -> usize {
        match self {
            ModelSpec::SeasonalNaive(p) => p.m,
            ModelSpec::AutoRegression(p) => p.p,
            ModelSpec::Arima(p) => p.p + p.d,
            ModelSpec::RandomForest(p) => p.lag_window,
            ModelSpec::Mlp(p) => p.window,
            ModelSpec::Rnn(p) | ModelSpec::Lstm(p) => p.window,
            ModelSpec::AutoencoderForecaster(p) => p.window,
            ModelSpec::GaussianRnn(p) => p.window,
        }
    }

    /// Fewest training points `fit` accepts.
    pub fn min_train_len(&self) -> usize {
        match self {
            ModelSpec::SeasonalNaive(p) => p.m,
            ModelSpec::AutoRegression(p) => p.p + 2,
            ModelSpec::Arima(p) => p.p + p.d + 2,
            ModelSpec::RandomForest(p) => p.lag_window + 2,
            _ => self.min_context() + 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastModelConfig {
    pub spec: ModelSpec,
    pub seed: u64,
}

impl ForecastModelConfig {
    pub fn new(spec: ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        Ok(ForecastModelConfig { spec, seed })
    }

    pub fn kind(&self) -> ModelKind {
        self.spec.kind()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "net", rename_all = "snake_case")]
pub enum NeuralNet {
    Mlp(MlpNet),
    Recurrent(RecurrentNet),
    Gaussian(GaussianNet),
    Autoencoder(ConvAutoencoderNet),
}

impl NeuralNet {
    fn predict(&self, contexts: &Array2<f64>) -> Vec<f64> {
        match self {
            NeuralNet::Mlp(n) => n.predict(contexts),
            NeuralNet::Recurrent(n) => n.predict(contexts),
            NeuralNet::Gaussian(n) => n.predict(contexts),
            NeuralNet::Autoencoder(n) => n.predict(contexts),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum ModelState {
    SeasonalNaive(SeasonalNaive),
    AutoRegression(AutoRegression),
    Arima(Arima),
    RandomForest(RandomForest),
    Neural { normalizer: Normalizer, net: NeuralNet },
}

/// A trained forecaster. Immutable after `fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedForecaster {
    pub format_version: u32,
    pub config: ForecastModelConfig,
    pub state: ModelState,
    pub train_len: usize,
    /// The last `min_context` training values, so rolling evaluation can start
    /// at the first test point.
    pub tail: Vec<f64>,
    /// Mean training loss per epoch (empty for non-gradient models).
    pub loss_history: Vec<f64>,
}

fn fit_net<N: WindowNet>(mut net: N, z: &[f64], settings: TrainSettings, seed: u64) -> Result<(N, Vec<f64>)> {
    let history = train_window_net(&mut net, z, &settings, seed)?;
    Ok((net, history))
}

impl FittedForecaster {
    pub fn fit(config: &ForecastModelConfig, train: &TimeSeries) -> Result<Self> {
        Self::fit_values(config, &train.values)
    }

    pub fn fit_values(config: &ForecastModelConfig, train: &[f64]) -> Result<Self> {
        let spec = &config.spec;
        spec.validate()?;
        let need = spec.min_train_len();
        if train.len() < need {
            return Err(Error::too_short(
                &format!("{} training points", spec.kind()),
                need,
                train.len(),
            ));
        }
        if let Some(i) = train.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("training value {i} is not finite")));
        }
        let mut history = Vec::new();
        let state = match spec {
            ModelSpec::SeasonalNaive(p) => ModelState::SeasonalNaive(SeasonalNaive::fit(p.m, train)?),
            ModelSpec::AutoRegression(p) => ModelState::AutoRegression(AutoRegression::fit(p.p, p.intercept, train)?),
            ModelSpec::Arima(p) => ModelState::Arima(Arima::fit(p.p, p.d, p.q, train)?),
            ModelSpec::RandomForest(p) => ModelState::RandomForest(RandomForest::fit(p, train, config.seed)?),
            _ => {
                let normalizer = Normalizer::fit(train);
                let z: Vec<f64> = train.iter().map(|&v| normalizer.apply(v)).collect();
                let mut init = rng::stream(config.seed, 0);
                let train_seed = rng::child_seed(config.seed, 1);
                let net = match spec {
                    ModelSpec::Mlp(p) => {
                        let (net, h) = fit_net(
                            MlpNet::new(p.window, p.layers, p.neurons, &mut init),
                            &z,
                            TrainSettings {
                                learning_rate: p.learning_rate,
                                batch_size: p.batch_size,
                                epochs: p.epochs,
                                clip_norm: None,
                            },
                            train_seed,
                        )?;
                        history = h;
                        NeuralNet::Mlp(net)
                    }
                    ModelSpec::Rnn(p) | ModelSpec::Lstm(p) => {
                        let kind = if matches!(spec, ModelSpec::Lstm(_)) {
                            RecurrentKind::Lstm
                        } else {
                            RecurrentKind::Elman
                        };
                        let head: Vec<usize> = if p.head > 0 { vec![p.head] } else { Vec::new() };
                        let (net, h) = fit_net(
                            RecurrentNet::new(kind, p.window, p.hidden, p.layers, &head, &mut init),
                            &z,
                            TrainSettings {
                                learning_rate: p.learning_rate,
                                batch_size: p.batch_size,
                                epochs: p.epochs,
                                clip_norm: Some(p.clip_norm),
                            },
                            train_seed,
                        )?;
                        history = h;
                        NeuralNet::Recurrent(net)
                    }
                    ModelSpec::AutoencoderForecaster(p) => {
                        let (net, h) = fit_net(
                            ConvAutoencoderNet::new(p.window, p.filters, p.layers, p.kernel, p.stride, p.dropout, &mut init),
                            &z,
                            TrainSettings {
                                learning_rate: p.learning_rate,
                                batch_size: p.batch_size,
                                epochs: p.epochs,
                                clip_norm: None,
                            },
                            train_seed,
                        )?;
                        history = h;
                        NeuralNet::Autoencoder(net)
                    }
                    ModelSpec::GaussianRnn(p) => {
                        let (net, h) = fit_net(
                            GaussianNet::new(p.window, p.cells, p.layers, &mut init),
                            &z,
                            TrainSettings {
                                learning_rate: p.learning_rate,
                                batch_size: p.batch_size,
                                epochs: p.epochs,
                                clip_norm: Some(p.clip_norm),
                            },
                            train_seed,
                        )?;
                        history = h;
                        NeuralNet::Gaussian(net)
                    }
                    _ => unreachable!("classical kinds handled above"),
                };
                ModelState::Neural { normalizer, net }
            }
        };
        let ctx = spec.min_context();
        Ok(FittedForecaster {
            format_version: FORECAST_FORMAT_VERSION,
            config: *config,
            state,
            train_len: train.len(),
            tail: train[train.len() - ctx..].to_vec(),
            loss_history: history,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.config.kind()
    }

    pub fn min_context(&self) -> usize {
        self.config.spec.min_context()
    }

    /// Forecast of the value following `context`.
    pub fn predict_one_step(&self, context: &[f64]) -> Result<f64> {
        let need = self.min_context();
        if context.len() < need {
            return Err(Error::too_short(&format!("{} context", self.kind()), need, context.len()));
        }
        Ok(self.predict_many(context, &[context.len()])[0])
    }

    /// One-step forecasts for every test point, each made from the training
    /// tail and the true test values before it.
    pub fn rolling_predictions(&self, test: &[f64]) -> Vec<f64> {
        let mut history = self.tail.clone();
        history.extend_from_slice(test);
        let ends: Vec<usize> = (0..test.len()).map(|i| self.tail.len() + i).collect();
        self.predict_many(&history, &ends)
    }

    /// Forecasts from `history[..end]` for each `end` (each `end ≥ min_context`).
    fn predict_many(&self, history: &[f64], ends: &[usize]) -> Vec<f64> {
        match &self.state {
            ModelState::SeasonalNaive(m) => ends.iter().map(|&e| m.predict(&history[..e])).collect(),
            ModelState::AutoRegression(m) => ends.iter().map(|&e| m.predict(&history[..e])).collect(),
            ModelState::Arima(m) => ends.iter().map(|&e| m.predict(&history[..e])).collect(),
            ModelState::RandomForest(m) => ends.iter().map(|&e| m.predict(&history[..e])).collect(),
            ModelState::Neural { normalizer, net } => {
                let w = self.min_context();
                let mut out = Vec::with_capacity(ends.len());
                for chunk in ends.chunks(PREDICT_BATCH) {
                    let ctx = Array2::from_shape_fn((chunk.len(), w), |(i, j)| {
                        normalizer.apply(history[chunk[i] - w + j])
                    });
                    out.extend(net.predict(&ctx).into_iter().map(|z| normalizer.invert(z)));
                }
                out
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let probe: serde_json::Value = serde_json::from_str(text)?;
        match probe.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(FORECAST_FORMAT_VERSION) => {}
            Some(v) => {
                return Err(Error::Format(format!(
                    "forecaster format version {v} is not supported (expected {FORECAST_FORMAT_VERSION})"
                )))
            }
            None => return Err(Error::Format("forecaster file lacks format_version".into())),
        }
        Ok(serde_json::from_value(probe)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

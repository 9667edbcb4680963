//! Gradient-trained forecasters over fixed-length context windows.
//!
//! Every network sees the z-scored series. A training example is a window of
//! `L + 1` consecutive values; what each network predicts from it differs:
//! dense and recurrent nets predict the last value from the first `L`, the
//! Gaussian RNN predicts every next value along the window, and the
//! convolutional autoencoder maps the first `L` values to the last `L`.

use ndarray::{s, Array2, Array3, Axis};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::loss::{gaussian_nll_grad, mse, softplus, SIGMA_FLOOR};
use crate::nn::{
    check_loss, clip_global_norm, sgd_step, zeros_like, Activation, Conv1d, ConvTranspose1d, Dense, Mlp, Params,
    RecurrentKind, RecurrentStack,
};
use crate::rng::{self, Rng};

/// Z-score statistics of the training split. A constant split gets std 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: f64,
    pub std: f64,
}

impl Normalizer {
    pub fn fit(train: &[f64]) -> Self {
        let n = train.len() as f64;
        let mean = train.iter().sum::<f64>() / n;
        let var = train.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        Normalizer {
            mean,
            std: if std > 0.0 && std.is_finite() { std } else { 1.0 },
        }
    }

    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Global gradient-norm cap applied before each update.
    pub clip_norm: Option<f64>,
}

impl TrainSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) || self.batch_size == 0 {
            return Err(Error::Config(
                "learning rate and batch size must be positive".into(),
            ));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(Error::Config("gradient clip norm must be positive".into()));
            }
        }
        Ok(())
    }
}

/// A network trained on windows of `window() + 1` normalized values.
pub trait WindowNet: Params + Clone + Send + Sync {
    fn window(&self) -> usize;

    /// Mean training loss over the batch and its parameter gradient. `dropout`
    /// supplies randomness for train-time dropout; `None` runs deterministically.
    fn loss_and_grad(&self, windows: &Array2<f64>, dropout: Option<&mut Rng>) -> (f64, Self);

    /// Deterministic loss, for monitoring and finite-difference checks.
    fn loss(&self, windows: &Array2<f64>) -> f64 {
        self.loss_and_grad(windows, None).0
    }

    /// One-step predictions from `batch × window()` contexts.
    fn predict(&self, contexts: &Array2<f64>) -> Vec<f64>;
}

/// All overlapping windows of length `len` as rows.
pub fn windows_of(series: &[f64], len: usize) -> Array2<f64> {
    let n = series.len() + 1 - len;
    Array2::from_shape_fn((n, len), |(i, j)| series[i + j])
}

/// Mini-batch SGD for exactly `settings.epochs` epochs. Returns the mean
/// training loss of each epoch.
pub fn train_window_net<N: WindowNet>(net: &mut N, series: &[f64], settings: &TrainSettings, seed: u64) -> Result<Vec<f64>> {
    settings.validate()?;
    let need = net.window() + 1;
    if series.len() < need {
        return Err(Error::too_short("training points for the context window", need, series.len()));
    }
    let all = windows_of(series, need);
    let n = all.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    let mut shuffler = rng::stream(seed, 1);
    let mut dropout = rng::stream(seed, 2);
    let mut history = Vec::with_capacity(settings.epochs);
    for epoch in 1..=settings.epochs {
        order.shuffle(&mut shuffler);
        let mut total = 0.0;
        for chunk in order.chunks(settings.batch_size) {
            let batch = all.select(Axis(0), chunk);
            let (loss, mut grads) = net.loss_and_grad(&batch, Some(&mut dropout));
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            if let Some(c) = settings.clip_norm {
                clip_global_norm(&mut grads, c);
            }
            sgd_step(net, &grads, settings.learning_rate);
            total += loss * chunk.len() as f64;
        }
        history.push(check_loss(epoch, total / n as f64)?);
        if !net.all_finite() {
            return Err(Error::Diverged { epoch, loss: f64::NAN });
        }
    }
    Ok(history)
}

fn split_window(windows: &Array2<f64>, len: usize) -> (Array2<f64>, Array2<f64>) {
    (
        windows.slice(s![.., 0..len]).to_owned(),
        windows.slice(s![.., len..len + 1]).to_owned(),
    )
}

/// Dense net: context → hidden layers (ReLU) → next value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpNet {
    pub mlp: Mlp,
}

impl MlpNet {
    pub fn new(window: usize, hidden_layers: usize, neurons: usize, r: &mut Rng) -> Self {
        let mut sizes = vec![window];
        sizes.extend(std::iter::repeat_n(neurons, hidden_layers));
        sizes.push(1);
        MlpNet {
            mlp: Mlp::new(&sizes, Activation::Relu, Activation::Identity, r),
        }
    }
}

impl Params for MlpNet {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        self.mlp.visit(f)
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        self.mlp.visit_mut(f)
    }
}

impl WindowNet for MlpNet {
    fn window(&self) -> usize {
        self.mlp.input_dim()
    }

    fn loss_and_grad(&self, windows: &Array2<f64>, _dropout: Option<&mut Rng>) -> (f64, Self) {
        let (x, y) = split_window(windows, self.window());
        let cache = self.mlp.forward_cached(&x);
        let (loss, g) = mse(cache.output(), &y);
        let mut grads = zeros_like(self);
        self.mlp.backward(&cache, &g, &mut grads.mlp);
        (loss, grads)
    }

    fn predict(&self, contexts: &Array2<f64>) -> Vec<f64> {
        self.mlp.forward(contexts).column(0).to_vec()
    }
}

fn as_sequence(x: &Array2<f64>) -> Vec<Array2<f64>> {
    (0..x.ncols()).map(|t| x.slice(s![.., t..t + 1]).to_owned()).collect()
}

/// Recurrent stack read out from its final hidden state by a dense head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrentNet {
    pub window: usize,
    pub stack: RecurrentStack,
    pub head: Mlp,
}

impl RecurrentNet {
    /// `head_hidden` = widths of the dense head's hidden layers (may be empty).
    pub fn new(kind: RecurrentKind, window: usize, hidden: usize, layers: usize, head_hidden: &[usize], r: &mut Rng) -> Self {
        let stack = RecurrentStack::new(kind, 1, hidden, layers, r);
        let mut sizes = vec![hidden];
        sizes.extend_from_slice(head_hidden);
        sizes.push(1);
        RecurrentNet {
            window,
            stack,
            head: Mlp::new(&sizes, Activation::Relu, Activation::Identity, r),
        }
    }
}

impl Params for RecurrentNet {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        self.stack.visit(f);
        self.head.visit(f);
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        self.stack.visit_mut(f);
        self.head.visit_mut(f);
    }
}

impl WindowNet for RecurrentNet {
    fn window(&self) -> usize {
        self.window
    }

    fn loss_and_grad(&self, windows: &Array2<f64>, _dropout: Option<&mut Rng>) -> (f64, Self) {
        let (x, y) = split_window(windows, self.window);
        let seq = as_sequence(&x);
        let (hs, cache) = self.stack.forward(&seq);
        let last = hs.last().expect("nonempty window");
        let head_cache = self.head.forward_cached(last);
        let (loss, g) = mse(head_cache.output(), &y);
        let mut grads = zeros_like(self);
        let dh_last = self.head.backward(&head_cache, &g, &mut grads.head);
        let mut dh: Vec<Array2<f64>> = hs.iter().map(|h| Array2::zeros(h.raw_dim())).collect();
        *dh.last_mut().expect("nonempty") = dh_last;
        self.stack.backward(&cache, &dh, &mut grads.stack);
        (loss, grads)
    }

    fn predict(&self, contexts: &Array2<f64>) -> Vec<f64> {
        let (hs, _) = self.stack.forward(&as_sequence(contexts));
        self.head.forward(hs.last().expect("nonempty")).column(0).to_vec()
    }
}

/// LSTM stack emitting `(μ, σ)` for the next value at every step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNet {
    pub window: usize,
    pub stack: RecurrentStack,
    pub head: Dense,
}

impl GaussianNet {
    pub fn new(window: usize, cells: usize, layers: usize, r: &mut Rng) -> Self {
        GaussianNet {
            window,
            stack: RecurrentStack::new(RecurrentKind::Lstm, 1, cells, layers, r),
            head: Dense::new(cells, 2, r),
        }
    }

    /// `(μ, σ)` after consuming each context row.
    pub fn predict_distribution(&self, contexts: &Array2<f64>) -> Vec<(f64, f64)> {
        let (hs, _) = self.stack.forward(&as_sequence(contexts));
        let out = self.head.forward(hs.last().expect("nonempty"));
        out.rows()
            .into_iter()
            .map(|r| (r[0], softplus(r[1]) + SIGMA_FLOOR))
            .collect()
    }
}

impl Params for GaussianNet {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        self.stack.visit(f);
        self.head.visit(f);
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        self.stack.visit_mut(f);
        self.head.visit_mut(f);
    }
}

impl WindowNet for GaussianNet {
    fn window(&self) -> usize {
        self.window
    }

    /// Mean Gaussian negative log-likelihood over every (row, step).
    fn loss_and_grad(&self, windows: &Array2<f64>, _dropout: Option<&mut Rng>) -> (f64, Self) {
        let l = self.window;
        let x = windows.slice(s![.., 0..l]).to_owned();
        let (hs, cache) = self.stack.forward(&as_sequence(&x));
        let batch = windows.nrows();
        let count = (batch * l) as f64;
        let mut grads = zeros_like(self);
        let mut dh = Vec::with_capacity(l);
        let mut total = 0.0;
        for (t, h) in hs.iter().enumerate() {
            let out = self.head.forward(h);
            let mut g = Array2::zeros((batch, 2));
            for b in 0..batch {
                let (nll, d_mu, d_raw) = gaussian_nll_grad(windows[[b, t + 1]], out[[b, 0]], out[[b, 1]]);
                total += nll;
                g[[b, 0]] = d_mu / count;
                g[[b, 1]] = d_raw / count;
            }
            dh.push(self.head.backward(h, &g, &mut grads.head));
        }
        self.stack.backward(&cache, &dh, &mut grads.stack);
        (total / count, grads)
    }

    fn predict(&self, contexts: &Array2<f64>) -> Vec<f64> {
        self.predict_distribution(contexts).into_iter().map(|(m, _)| m).collect()
    }
}

/// Strided convolutional encoder with a mirrored transposed-convolution decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvAutoencoderNet {
    pub window: usize,
    pub encoder: Vec<Conv1d>,
    pub decoder: Vec<ConvTranspose1d>,
    pub dropout: f64,
}

struct AeCache {
    /// Input of each layer, encoder then decoder.
    inputs: Vec<Array3<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Array3<f64>>,
    /// Dropout keep-masks (already scaled) per layer, when active.
    masks: Vec<Option<Array3<f64>>>,
    output: Array3<f64>,
}

impl ConvAutoencoderNet {
    pub fn new(window: usize, filters: usize, layers: usize, kernel: usize, stride: usize, dropout: f64, r: &mut Rng) -> Self {
        let mut encoder = Vec::with_capacity(layers);
        let mut decoder = Vec::with_capacity(layers);
        for i in 0..layers {
            encoder.push(Conv1d::new(if i == 0 { 1 } else { filters }, filters, kernel, stride, r));
        }
        for i in 0..layers {
            let out = if i + 1 == layers { 1 } else { filters };
            decoder.push(ConvTranspose1d::new(filters, out, kernel, stride, r));
        }
        ConvAutoencoderNet {
            window,
            encoder,
            decoder,
            dropout,
        }
    }

    /// Encoder output lengths, one per layer.
    pub fn encoded_lengths(&self) -> Vec<usize> {
        let mut len = self.window;
        self.encoder
            .iter()
            .map(|c| {
                len = c.output_len(len);
                len
            })
            .collect()
    }

    fn n_layers(&self) -> usize {
        self.encoder.len() + self.decoder.len()
    }

    fn forward_cached(&self, x: &Array3<f64>, mut dropout: Option<&mut Rng>) -> AeCache {
        let total = self.n_layers();
        let mut cache = AeCache {
            inputs: Vec::with_capacity(total),
            pre: Vec::with_capacity(total),
            masks: Vec::with_capacity(total),
            output: Array3::zeros((0, 0, 0)),
        };
        let mut h = x.clone();
        for k in 0..total {
            let z = if k < self.encoder.len() {
                self.encoder[k].forward(&h)
            } else {
                self.decoder[k - self.encoder.len()].forward(&h)
            };
            cache.inputs.push(h);
            let last = k + 1 == total;
            let mut a = if last { z.clone() } else { z.mapv(|v| v.max(0.0)) };
            let mask = match (&mut dropout, last) {
                (Some(r), false) if self.dropout > 0.0 => {
                    let keep = 1.0 - self.dropout;
                    let m = a.mapv(|_| if r.random::<f64>() < keep { 1.0 / keep } else { 0.0 });
                    a *= &m;
                    Some(m)
                }
                _ => None,
            };
            cache.pre.push(z);
            cache.masks.push(mask);
            h = a;
        }
        cache.output = h.slice(s![.., .., 0..self.window]).to_owned();
        cache
    }

    fn backward(&self, cache: &AeCache, grad_out: &Array3<f64>, grads: &mut Self) {
        let total = self.n_layers();
        let full_len = cache.pre[total - 1].dim().2;
        let mut g = Array3::zeros((grad_out.dim().0, 1, full_len));
        g.slice_mut(s![.., .., 0..self.window]).assign(grad_out);
        for k in (0..total).rev() {
            if let Some(m) = &cache.masks[k] {
                g *= m;
            }
            if k + 1 != total {
                ndarray::Zip::from(&mut g).and(&cache.pre[k]).for_each(|d, &z| {
                    if z <= 0.0 {
                        *d = 0.0
                    }
                });
            }
            g = if k < self.encoder.len() {
                self.encoder[k].backward(&cache.inputs[k], &g, &mut grads.encoder[k])
            } else {
                let j = k - self.encoder.len();
                self.decoder[j].backward(&cache.inputs[k], &g, &mut grads.decoder[j])
            };
        }
    }

    fn to_tensor(x: &Array2<f64>) -> Array3<f64> {
        x.clone().insert_axis(Axis(1))
    }

    /// Reconstruction of each context row (dropout off).
    pub fn reconstruct(&self, contexts: &Array2<f64>) -> Array2<f64> {
        let c = self.forward_cached(&Self::to_tensor(contexts), None);
        c.output.index_axis(Axis(1), 0).to_owned()
    }
}

impl Params for ConvAutoencoderNet {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        for c in &self.encoder {
            c.visit(f);
        }
        for c in &self.decoder {
            c.visit(f);
        }
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        for c in &mut self.encoder {
            c.visit_mut(f);
        }
        for c in &mut self.decoder {
            c.visit_mut(f);
        }
    }
}

impl WindowNet for ConvAutoencoderNet {
    fn window(&self) -> usize {
        self.window
    }

    fn loss_and_grad(&self, windows: &Array2<f64>, dropout: Option<&mut Rng>) -> (f64, Self) {
        let l = self.window;
        let x = Self::to_tensor(&windows.slice(s![.., 0..l]).to_owned());
        let target = Self::to_tensor(&windows.slice(s![.., 1..l + 1]).to_owned());
        let cache = self.forward_cached(&x, dropout);
        let diff = &cache.output - &target;
        let n = diff.len() as f64;
        let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
        let g = diff * (2.0 / n);
        let mut grads = zeros_like(self);
        self.backward(&cache, &g, &mut grads);
        (loss, grads)
    }

    fn predict(&self, contexts: &Array2<f64>) -> Vec<f64> {
        let rec = self.reconstruct(contexts);
        rec.column(self.window - 1).to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::finite_difference_check;

    fn toy_windows(rows: usize, len: usize) -> Array2<f64> {
        Array2::from_shape_fn((rows, len), |(i, j)| ((i * 5 + j) as f64 * 0.37 + 0.11).sin())
    }

    fn fd<N: WindowNet>(net: &N, w: &Array2<f64>) -> f64 {
        let (_, g) = net.loss_and_grad(w, None);
        finite_difference_check(net, &g, 1e-5, 1e-8, |n| n.loss(w))
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut r = rng::seeded(4);
        let w = toy_windows(3, 5);
        assert!(fd(&MlpNet::new(4, 2, 3, &mut r), &w) < 1e-4);
        let w4 = toy_windows(2, 5);
        assert!(fd(&RecurrentNet::new(RecurrentKind::Lstm, 4, 3, 2, &[2], &mut r), &w4) < 1e-3);
        // Zero biases put ReLU pre-activations exactly on the kink wherever a
        // lower layer outputs all zeros, so draw every parameter at random.
        let mut elman = RecurrentNet::new(RecurrentKind::Elman, 4, 3, 2, &[], &mut r);
        let theta: Vec<f64> = (0..elman.num_params()).map(|_| r.random_range(-0.5..0.5)).collect();
        elman.set_flat(&theta);
        let e = fd(&elman, &w4);
        assert!(e < 1e-3, "{e}");
        assert!(fd(&GaussianNet::new(4, 3, 2, &mut r), &w4) < 1e-3);
        let w8 = toy_windows(2, 9);
        assert!(fd(&ConvAutoencoderNet::new(8, 3, 3, 7, 2, 0.2, &mut r), &w8) < 1e-4);
    }

    #[test]
    fn autoencoder_gradient_with_fixed_dropout_masks() {
        let mut r = rng::seeded(12);
        let net = ConvAutoencoderNet::new(8, 3, 3, 7, 2, 0.5, &mut r);
        let w = toy_windows(2, 9);
        let (_, g) = net.loss_and_grad(&w, Some(&mut rng::seeded(77)));
        let err = finite_difference_check(&net, &g, 1e-5, 1e-8, |n| n.loss_and_grad(&w, Some(&mut rng::seeded(77))).0);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn encoder_lengths_halve() {
        let mut r = rng::seeded(1);
        let net = ConvAutoencoderNet::new(64, 4, 3, 7, 2, 0.2, &mut r);
        assert_eq!(net.encoded_lengths(), vec![32, 16, 8]);
        let ctx = toy_windows(3, 64);
        assert_eq!(net.reconstruct(&ctx).dim(), (3, 64));
        assert_eq!(net.predict(&ctx), net.predict(&ctx));
    }

    #[test]
    fn normalizer_handles_constant() {
        let n = Normalizer::fit(&[3.0, 3.0, 3.0]);
        assert_eq!((n.mean, n.std), (3.0, 1.0));
        let m = Normalizer::fit(&[1.0, 3.0]);
        assert_eq!((m.mean, m.std), (2.0, 1.0));
        assert_eq!(m.invert(m.apply(7.5)), 7.5);
    }

    #[test]
    fn mlp_training_reduces_loss() {
        let series: Vec<f64> = (0..400).map(|t| (t as f64 * 0.3).sin()).collect();
        let mut r = rng::seeded(2);
        let mut net = MlpNet::new(10, 3, 50, &mut r);
        let s = TrainSettings {
            learning_rate: 0.01,
            batch_size: 10,
            epochs: 5,
            clip_norm: None,
        };
        let h = train_window_net(&mut net, &series, &s, 2).unwrap();
        assert_eq!(h.len(), 5);
        assert!(h[4] <= h[0], "{h:?}");
    }

    #[test]
    fn divergence_reports_epoch() {
        let series: Vec<f64> = (0..100).map(|t| (t as f64 * 0.3).sin() * 10.0).collect();
        let mut r = rng::seeded(2);
        let mut net = MlpNet::new(4, 2, 20, &mut r);
        let s = TrainSettings {
            learning_rate: 1e6,
            batch_size: 10,
            epochs: 3,
            clip_norm: None,
        };
        match train_window_net(&mut net, &series, &s, 0) {
            Err(Error::Diverged { epoch, .. }) => assert!((1..=3).contains(&epoch)),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}

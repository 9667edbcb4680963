//! Losses and their gradients with respect to network outputs.

use ndarray::{Array2, Axis};

/// Row-wise softmax, shifted by the row maximum for stability.
pub fn softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut p = logits.clone();
    for mut row in p.axis_iter_mut(Axis(0)) {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    p
}

/// Mean cross-entropy of integer labels under softmax(logits), and its
/// gradient with respect to the logits.
pub fn softmax_cross_entropy(logits: &Array2<f64>, labels: &[usize]) -> (f64, Array2<f64>) {
    let n = logits.nrows();
    assert_eq!(n, labels.len());
    let mut grad = softmax(logits);
    let mut loss = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        // log p_y computed from logits directly for accuracy.
        let row = logits.row(i);
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        loss += lse - row[y];
        grad[[i, y]] -= 1.0;
    }
    grad /= n as f64;
    (loss / n as f64, grad)
}

/// Mean over all elements of the squared error, and its gradient.
pub fn mse(pred: &Array2<f64>, target: &Array2<f64>) -> (f64, Array2<f64>) {
    let diff = pred - target;
    let n = diff.len() as f64;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
    (loss, diff * (2.0 / n))
}

pub fn softplus(v: f64) -> f64 {
    if v > 30.0 {
        v
    } else {
        v.exp().ln_1p()
    }
}

pub const SIGMA_FLOOR: f64 = 1e-6;

/// Negative log-likelihood of `y` under N(mu, sigma²), per point.
pub fn gaussian_nll(y: f64, mu: f64, sigma: f64) -> f64 {
    let z = (y - mu) / sigma;
    0.5 * (2.0 * std::f64::consts::PI).ln() + sigma.ln() + 0.5 * z * z
}

/// Gradient of [`gaussian_nll`] with respect to `mu` and the raw (pre-softplus) scale.
pub fn gaussian_nll_grad(y: f64, mu: f64, raw: f64) -> (f64, f64, f64) {
    let sigma = softplus(raw) + SIGMA_FLOOR;
    let z = (y - mu) / sigma;
    let d_mu = -z / sigma;
    let d_sigma = 1.0 / sigma - z * z / sigma;
    let d_raw = d_sigma * super::dense::sigmoid(raw);
    (gaussian_nll(y, mu, sigma), d_mu, d_raw)
}

//! Small neural-network toolkit: layers with explicit backward passes,
//! parameter flattening for optimizers and finite-difference checks.

pub mod conv;
pub mod dense;
pub mod loss;
pub mod recurrent;

use ndarray::{Array1, Array2, Array3};
use rand::Rng as _;

use crate::error::{Error, Result};

pub use conv::{Conv1d, ConvTranspose1d};
pub use dense::{Activation, Dense, Mlp, MlpCache};
pub use recurrent::{ElmanLayer, LstmLayer, RecurrentKind, RecurrentLayer, RecurrentStack, StackCache};

/// Uniform initialization in ±sqrt(6 / (fan_in + fan_out)).
pub fn glorot_uniform(fan_in: usize, fan_out: usize, len: usize, rng: &mut crate::rng::Rng) -> Vec<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..len).map(|_| rng.random_range(-limit..limit)).collect()
}

/// Anything that owns trainable parameters, visited in a fixed order.
pub trait Params {
    fn visit(&self, f: &mut dyn FnMut(&[f64]));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64]));

    fn num_params(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |s| n += s.len());
        n
    }

    fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        self.visit(&mut |s| out.extend_from_slice(s));
        out
    }

    fn set_flat(&mut self, values: &[f64]) {
        let mut k = 0;
        self.visit_mut(&mut |s| {
            s.copy_from_slice(&values[k..k + s.len()]);
            k += s.len();
        });
        assert_eq!(k, values.len(), "parameter vector length mismatch");
    }

    fn fill(&mut self, value: f64) {
        self.visit_mut(&mut |s| s.fill(value));
    }

    fn all_finite(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |s| ok &= s.iter().all(|v| v.is_finite()));
        ok
    }
}

pub(crate) fn slice1(a: &Array1<f64>) -> &[f64] {
    a.as_slice().expect("standard layout")
}
pub(crate) fn slice1_mut(a: &mut Array1<f64>) -> &mut [f64] {
    a.as_slice_mut().expect("standard layout")
}
pub(crate) fn slice2(a: &Array2<f64>) -> &[f64] {
    a.as_slice().expect("standard layout")
}
pub(crate) fn slice2_mut(a: &mut Array2<f64>) -> &mut [f64] {
    a.as_slice_mut().expect("standard layout")
}
pub(crate) fn slice3(a: &Array3<f64>) -> &[f64] {
    a.as_slice().expect("standard layout")
}
pub(crate) fn slice3_mut(a: &mut Array3<f64>) -> &mut [f64] {
    a.as_slice_mut().expect("standard layout")
}

/// A zero-valued copy, used as a gradient accumulator.
pub fn zeros_like<P: Params + Clone>(p: &P) -> P {
    let mut z = p.clone();
    z.fill(0.0);
    z
}

pub fn global_norm<P: Params>(grads: &P) -> f64 {
    let mut s = 0.0;
    grads.visit(&mut |g| s += g.iter().map(|v| v * v).sum::<f64>());
    s.sqrt()
}

/// Rescales `grads` so their global norm is at most `max_norm`.
pub fn clip_global_norm<P: Params>(grads: &mut P, max_norm: f64) {
    let n = global_norm(grads);
    if n > max_norm && n.is_finite() {
        let k = max_norm / n;
        grads.visit_mut(&mut |g| g.iter_mut().for_each(|v| *v *= k));
    }
}

/// Plain SGD update `p -= lr · g`.
pub fn sgd_step<P: Params>(model: &mut P, grads: &P, lr: f64) {
    let g = grads.flat();
    let mut k = 0;
    model.visit_mut(&mut |s| {
        for v in s.iter_mut() {
            *v -= lr * g[k];
            k += 1;
        }
    });
}

/// Like [`sgd_step`] but leaves the parameter blocks with `frozen[i] == true` alone.
pub fn sgd_step_masked<P: Params>(model: &mut P, grads: &P, lr: f64, frozen: &[bool]) {
    let g = grads.flat();
    let mut k = 0;
    let mut block = 0;
    model.visit_mut(&mut |s| {
        let skip = frozen.get(block).copied().unwrap_or(false);
        for v in s.iter_mut() {
            if !skip {
                *v -= lr * g[k];
            }
            k += 1;
        }
        block += 1;
    });
}

/// Per-epoch loss bookkeeping shared by the training loops.
pub fn check_loss(epoch: usize, loss: f64) -> Result<f64> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::Diverged { epoch, loss })
    }
}

/// Largest relative error between an analytic gradient and central differences
/// of `loss` with step `h`, over every parameter.
///
/// Relative error is `|a - n| / max(|a| + |n|, floor)`; the floor keeps
/// near-zero gradients from dominating.
pub fn finite_difference_check<P, F>(model: &P, analytic: &P, h: f64, floor: f64, mut loss: F) -> f64
where
    P: Params + Clone,
    F: FnMut(&P) -> f64,
{
    let base = model.flat();
    let grad = analytic.flat();
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    let mut theta = base.clone();
    for i in 0..base.len() {
        theta[i] = base[i] + h;
        probe.set_flat(&theta);
        let up = loss(&probe);
        theta[i] = base[i] - h;
        probe.set_flat(&theta);
        let down = loss(&probe);
        theta[i] = base[i];
        let numeric = (up - down) / (2.0 * h);
        let rel = (grad[i] - numeric).abs() / (grad[i].abs() + numeric.abs()).max(floor);
        worst = worst.max(rel);
    }
    worst
}

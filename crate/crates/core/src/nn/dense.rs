//! Fully connected layers and multilayer perceptrons.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::{glorot_uniform, slice1, slice1_mut, slice2, slice2_mut, Params};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, z: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Identity => z.clone(),
            Activation::Relu => z.mapv(|v| v.max(0.0)),
            Activation::Tanh => z.mapv(f64::tanh),
            Activation::Sigmoid => z.mapv(sigmoid),
        }
    }

    /// Multiplies `grad` by the activation derivative, given pre-activation `z`
    /// and output `a`.
    pub fn backprop(self, z: &Array2<f64>, a: &Array2<f64>, grad: &mut Array2<f64>) {
        match self {
            Activation::Identity => {}
            Activation::Relu => ndarray::Zip::from(grad).and(z).for_each(|g, &z| {
                if z <= 0.0 {
                    *g = 0.0
                }
            }),
            Activation::Tanh => ndarray::Zip::from(grad).and(a).for_each(|g, &a| *g *= 1.0 - a * a),
            Activation::Sigmoid => ndarray::Zip::from(grad).and(a).for_each(|g, &a| *g *= a * (1.0 - a)),
        }
    }
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// `y = x · W + b` with `W` stored input × output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Dense {
    pub fn new(input: usize, output: usize, rng: &mut Rng) -> Self {
        let w = glorot_uniform(input, output, input * output, rng);
        Dense {
            w: Array2::from_shape_vec((input, output), w).expect("shape"),
            b: Array1::zeros(output),
        }
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Dense {
            w: Array2::zeros((input, output)),
            b: Array1::zeros(output),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w) + &self.b
    }

    /// Accumulates parameter gradients into `grads` and returns dL/dx.
    pub fn backward(&self, x: &Array2<f64>, grad_out: &Array2<f64>, grads: &mut Dense) -> Array2<f64> {
        grads.w += &x.t().dot(grad_out);
        grads.b += &grad_out.sum_axis(Axis(0));
        grad_out.dot(&self.w.t())
    }
}

impl Params for Dense {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        f(slice2(&self.w));
        f(slice1(&self.b));
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        f(slice2_mut(&mut self.w));
        f(slice1_mut(&mut self.b));
    }
}

/// Dense stack: every layer but the last uses `hidden`, the last uses `output`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub hidden: Activation,
    pub output: Activation,
}

/// Per-layer inputs, pre-activations and outputs of one forward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    pub inputs: Vec<Array2<f64>>,
    pub pre: Vec<Array2<f64>>,
    pub out: Vec<Array2<f64>>,
}

impl MlpCache {
    pub fn output(&self) -> &Array2<f64> {
        self.out.last().expect("nonempty network")
    }
}

impl Mlp {
    /// `sizes` = [input, hidden..., output].
    pub fn new(sizes: &[usize], hidden: Activation, output: Activation, rng: &mut Rng) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        Mlp {
            layers: sizes.windows(2).map(|w| Dense::new(w[0], w[1], rng)).collect(),
            hidden,
            output,
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].input_dim()];
        s.extend(self.layers.iter().map(Dense::output_dim));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").output_dim()
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.output
        } else {
            self.hidden
        }
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut h = x.clone();
        for (i, l) in self.layers.iter().enumerate() {
            h = self.activation(i).apply(&l.forward(&h));
        }
        h
    }

    pub fn forward_cached(&self, x: &Array2<f64>) -> MlpCache {
        let mut cache = MlpCache {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(self.layers.len()),
            out: Vec::with_capacity(self.layers.len()),
        };
        let mut h = x.clone();
        for (i, l) in self.layers.iter().enumerate() {
            let z = l.forward(&h);
            let a = self.activation(i).apply(&z);
            cache.inputs.push(h);
            cache.pre.push(z);
            h = a.clone();
            cache.out.push(a);
        }
        cache
    }

    /// Backpropagates dL/d(output) and returns dL/d(input).
    pub fn backward(&self, cache: &MlpCache, grad_out: &Array2<f64>, grads: &mut Mlp) -> Array2<f64> {
        let mut g = grad_out.clone();
        for i in (0..self.layers.len()).rev() {
            self.activation(i).backprop(&cache.pre[i], &cache.out[i], &mut g);
            g = self.layers[i].backward(&cache.inputs[i], &g, &mut grads.layers[i]);
        }
        g
    }
}

impl Params for Mlp {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        for l in &self.layers {
            l.visit(f);
        }
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        for l in &mut self.layers {
            l.visit_mut(f);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{finite_difference_check, zeros_like};
    use ndarray::array;

    fn sq_loss(m: &Mlp, x: &Array2<f64>, y: &Array2<f64>) -> f64 {
        let p = m.forward(x);
        (&p - y).mapv(|v| v * v).sum() / (2.0 * x.nrows() as f64)
    }

    #[test]
    fn dense_forward_by_hand() {
        let d = Dense {
            w: array![[1.0, 2.0], [3.0, 4.0]],
            b: array![0.5, -0.5],
        };
        let y = d.forward(&array![[1.0, 1.0]]);
        assert_eq!(y, array![[4.5, 5.5]]);
    }

    #[test]
    fn mlp_gradient_matches_finite_differences() {
        let mut r = crate::rng::seeded(7);
        for hidden in [Activation::Relu, Activation::Tanh, Activation::Sigmoid] {
            let m = Mlp::new(&[3, 5, 4, 2], hidden, Activation::Identity, &mut r);
            let x = Array2::from_shape_fn((6, 3), |(i, j)| ((i * 3 + j) as f64 * 0.37).sin());
            let y = Array2::from_shape_fn((6, 2), |(i, j)| ((i + j) as f64 * 0.5).cos());
            let cache = m.forward_cached(&x);
            let n = x.nrows() as f64;
            let grad_out = (cache.output() - &y) / n;
            let mut g = zeros_like(&m);
            m.backward(&cache, &grad_out, &mut g);
            let err = finite_difference_check(&m, &g, 1e-5, 1e-8, |p| sq_loss(p, &x, &y));
            assert!(err < 1e-4, "{hidden:?}: {err}");
        }
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut r = crate::rng::seeded(8);
        let m = Mlp::new(&[2, 3, 1], Activation::Tanh, Activation::Identity, &mut r);
        let x = array![[0.3, -0.7]];
        let cache = m.forward_cached(&x);
        let mut g = zeros_like(&m);
        let gx = m.backward(&cache, &array![[1.0]], &mut g);
        for j in 0..2 {
            let mut up = x.clone();
            up[[0, j]] += 1e-6;
            let mut dn = x.clone();
            dn[[0, j]] -= 1e-6;
            let num = (m.forward(&up)[[0, 0]] - m.forward(&dn)[[0, 0]]) / 2e-6;
            assert!((num - gx[[0, j]]).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_output_layer_predicts_bias() {
        let mut r = crate::rng::seeded(9);
        let mut m = Mlp::new(&[4, 8, 1], Activation::Relu, Activation::Identity, &mut r);
        let last = m.layers.last_mut().unwrap();
        last.w.fill(0.0);
        last.b[0] = 0.25;
        let x = Array2::from_shape_fn((5, 4), |(i, j)| (i as f64) - (j as f64));
        assert!(m.forward(&x).iter().all(|&v| v == 0.25));
    }
}

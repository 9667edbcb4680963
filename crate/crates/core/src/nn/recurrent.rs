//! Elman (ReLU) and LSTM layers with backpropagation through time.
//!
//! Sequences are slices of `batch × features` matrices, one per time step.
//! Initial hidden and cell states are zero.

use ndarray::{s, Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::dense::sigmoid;
use super::{glorot_uniform, slice1, slice1_mut, slice2, slice2_mut, Params};
use crate::rng::Rng;

fn init_matrix(rows: usize, cols: usize, fan_in: usize, fan_out: usize, rng: &mut Rng) -> Array2<f64> {
    Array2::from_shape_vec((rows, cols), glorot_uniform(fan_in, fan_out, rows * cols, rng)).expect("shape")
}

/// `h_t = relu(x_t · Wx + h_{t-1} · Wh + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElmanLayer {
    pub wx: Array2<f64>,
    pub wh: Array2<f64>,
    pub b: Array1<f64>,
}

/// LSTM with gates packed as `[input, forget, cell candidate, output]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmLayer {
    pub wx: Array2<f64>,
    pub wh: Array2<f64>,
    pub b: Array1<f64>,
}

impl ElmanLayer {
    pub fn new(input: usize, hidden: usize, rng: &mut Rng) -> Self {
        ElmanLayer {
            wx: init_matrix(input, hidden, input, hidden, rng),
            wh: init_matrix(hidden, hidden, hidden, hidden, rng),
            b: Array1::zeros(hidden),
        }
    }
}

impl LstmLayer {
    /// Forget-gate biases start at 1.
    pub fn new(input: usize, hidden: usize, rng: &mut Rng) -> Self {
        let mut b = Array1::zeros(4 * hidden);
        b.slice_mut(s![hidden..2 * hidden]).fill(1.0);
        LstmLayer {
            wx: init_matrix(input, 4 * hidden, input, hidden, rng),
            wh: init_matrix(hidden, 4 * hidden, hidden, hidden, rng),
            b,
        }
    }

    pub fn hidden(&self) -> usize {
        self.wh.nrows()
    }
}

macro_rules! impl_params {
    ($t:ty) => {
        impl Params for $t {
            fn visit(&self, f: &mut dyn FnMut(&[f64])) {
                f(slice2(&self.wx));
                f(slice2(&self.wh));
                f(slice1(&self.b));
            }
            fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
                f(slice2_mut(&mut self.wx));
                f(slice2_mut(&mut self.wh));
                f(slice1_mut(&mut self.b));
            }
        }
    };
}
impl_params!(ElmanLayer);
impl_params!(LstmLayer);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecurrentKind {
    Elman,
    Lstm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RecurrentLayer {
    Elman(ElmanLayer),
    Lstm(LstmLayer),
}

/// Per-step values a layer needs for its backward pass.
#[derive(Debug, Clone)]
pub enum LayerCache {
    Elman {
        xs: Vec<Array2<f64>>,
        hs: Vec<Array2<f64>>,
        pre: Vec<Array2<f64>>,
    },
    Lstm {
        xs: Vec<Array2<f64>>,
        hs: Vec<Array2<f64>>,
        cs: Vec<Array2<f64>>,
        /// Activated gates per step, `batch × 4H`.
        gates: Vec<Array2<f64>>,
        tanh_c: Vec<Array2<f64>>,
    },
}

impl RecurrentLayer {
    pub fn new(kind: RecurrentKind, input: usize, hidden: usize, rng: &mut Rng) -> Self {
        match kind {
            RecurrentKind::Elman => RecurrentLayer::Elman(ElmanLayer::new(input, hidden, rng)),
            RecurrentKind::Lstm => RecurrentLayer::Lstm(LstmLayer::new(input, hidden, rng)),
        }
    }

    pub fn hidden(&self) -> usize {
        match self {
            RecurrentLayer::Elman(l) => l.wh.nrows(),
            RecurrentLayer::Lstm(l) => l.wh.nrows(),
        }
    }

    /// Runs the sequence; returns hidden states for every step plus the cache.
    pub fn forward(&self, xs: &[Array2<f64>]) -> (Vec<Array2<f64>>, LayerCache) {
        let batch = xs[0].nrows();
        let h_dim = self.hidden();
        match self {
            RecurrentLayer::Elman(l) => {
                let mut h = Array2::zeros((batch, h_dim));
                let mut hs = Vec::with_capacity(xs.len() + 1);
                let mut pre = Vec::with_capacity(xs.len());
                hs.push(h.clone());
                for x in xs {
                    let z = x.dot(&l.wx) + h.dot(&l.wh) + &l.b;
                    h = z.mapv(|v| v.max(0.0));
                    pre.push(z);
                    hs.push(h.clone());
                }
                let out = hs[1..].to_vec();
                (out, LayerCache::Elman { xs: xs.to_vec(), hs, pre })
            }
            RecurrentLayer::Lstm(l) => {
                let mut h = Array2::zeros((batch, h_dim));
                let mut c = Array2::zeros((batch, h_dim));
                let mut hs = vec![h.clone()];
                let mut cs = vec![c.clone()];
                let mut gates = Vec::with_capacity(xs.len());
                let mut tanh_c = Vec::with_capacity(xs.len());
                for x in xs {
                    let mut g = x.dot(&l.wx) + h.dot(&l.wh) + &l.b;
                    g.slice_mut(s![.., 0..2 * h_dim]).mapv_inplace(sigmoid);
                    g.slice_mut(s![.., 2 * h_dim..3 * h_dim]).mapv_inplace(f64::tanh);
                    g.slice_mut(s![.., 3 * h_dim..]).mapv_inplace(sigmoid);
                    let i = g.slice(s![.., 0..h_dim]);
                    let f = g.slice(s![.., h_dim..2 * h_dim]);
                    let gg = g.slice(s![.., 2 * h_dim..3 * h_dim]);
                    let o = g.slice(s![.., 3 * h_dim..]);
                    c = &f * &c + &i * &gg;
                    let tc = c.mapv(f64::tanh);
                    h = &o * &tc;
                    gates.push(g);
                    tanh_c.push(tc);
                    hs.push(h.clone());
                    cs.push(c.clone());
                }
                let out = hs[1..].to_vec();
                (
                    out,
                    LayerCache::Lstm {
                        xs: xs.to_vec(),
                        hs,
                        cs,
                        gates,
                        tanh_c,
                    },
                )
            }
        }
    }

    /// Given dL/dh_t for every step, accumulates parameter gradients and
    /// returns dL/dx_t for every step.
    pub fn backward(&self, cache: &LayerCache, dh_ext: &[Array2<f64>], grads: &mut RecurrentLayer) -> Vec<Array2<f64>> {
        match (self, cache, grads) {
            (RecurrentLayer::Elman(l), LayerCache::Elman { xs, hs, pre }, RecurrentLayer::Elman(g)) => {
                let steps = xs.len();
                let mut dxs = vec![Array2::zeros((0, 0)); steps];
                let mut dh_next = Array2::<f64>::zeros(dh_ext[0].raw_dim());
                for t in (0..steps).rev() {
                    let mut dz = &dh_ext[t] + &dh_next;
                    ndarray::Zip::from(&mut dz).and(&pre[t]).for_each(|d, &z| {
                        if z <= 0.0 {
                            *d = 0.0
                        }
                    });
                    g.wx += &xs[t].t().dot(&dz);
                    g.wh += &hs[t].t().dot(&dz);
                    g.b += &dz.sum_axis(Axis(0));
                    dxs[t] = dz.dot(&l.wx.t());
                    dh_next = dz.dot(&l.wh.t());
                }
                dxs
            }
            (
                RecurrentLayer::Lstm(l),
                LayerCache::Lstm {
                    xs,
                    hs,
                    cs,
                    gates,
                    tanh_c,
                },
                RecurrentLayer::Lstm(g),
            ) => {
                let steps = xs.len();
                let h_dim = l.hidden();
                let batch = xs[0].nrows();
                let mut dxs = vec![Array2::zeros((0, 0)); steps];
                let mut dh_next = Array2::<f64>::zeros((batch, h_dim));
                let mut dc_next = Array2::<f64>::zeros((batch, h_dim));
                let mut dz = Array2::<f64>::zeros((batch, 4 * h_dim));
                for t in (0..steps).rev() {
                    let dh = &dh_ext[t] + &dh_next;
                    let gt = &gates[t];
                    let c_prev = &cs[t];
                    let tc = &tanh_c[t];
                    for b in 0..batch {
                        for k in 0..h_dim {
                            let i = gt[[b, k]];
                            let f = gt[[b, h_dim + k]];
                            let gg = gt[[b, 2 * h_dim + k]];
                            let o = gt[[b, 3 * h_dim + k]];
                            let dhv = dh[[b, k]];
                            let tcv = tc[[b, k]];
                            let dc = dhv * o * (1.0 - tcv * tcv) + dc_next[[b, k]];
                            dz[[b, k]] = dc * gg * i * (1.0 - i);
                            dz[[b, h_dim + k]] = dc * c_prev[[b, k]] * f * (1.0 - f);
                            dz[[b, 2 * h_dim + k]] = dc * i * (1.0 - gg * gg);
                            dz[[b, 3 * h_dim + k]] = dhv * tcv * o * (1.0 - o);
                            dc_next[[b, k]] = dc * f;
                        }
                    }
                    g.wx += &xs[t].t().dot(&dz);
                    g.wh += &hs[t].t().dot(&dz);
                    g.b += &dz.sum_axis(Axis(0));
                    dxs[t] = dz.dot(&l.wx.t());
                    dh_next = dz.dot(&l.wh.t());
                }
                dxs
            }
            _ => panic!("recurrent layer, cache and gradient kinds differ"),
        }
    }
}

impl Params for RecurrentLayer {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        match self {
            RecurrentLayer::Elman(l) => l.visit(f),
            RecurrentLayer::Lstm(l) => l.visit(f),
        }
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        match self {
            RecurrentLayer::Elman(l) => l.visit_mut(f),
            RecurrentLayer::Lstm(l) => l.visit_mut(f),
        }
    }
}

/// Stacked recurrent layers; each layer consumes the previous layer's hidden sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrentStack {
    pub layers: Vec<RecurrentLayer>,
}

#[derive(Debug, Clone)]
pub struct StackCache {
    pub layers: Vec<LayerCache>,
}

impl RecurrentStack {
    pub fn new(kind: RecurrentKind, input: usize, hidden: usize, depth: usize, rng: &mut Rng) -> Self {
        assert!(depth >= 1);
        let layers = (0..depth)
            .map(|d| RecurrentLayer::new(kind, if d == 0 { input } else { hidden }, hidden, rng))
            .collect();
        RecurrentStack { layers }
    }

    pub fn hidden(&self) -> usize {
        self.layers.last().expect("nonempty").hidden()
    }

    /// Top-layer hidden states for every step.
    pub fn forward(&self, xs: &[Array2<f64>]) -> (Vec<Array2<f64>>, StackCache) {
        let mut seq = xs.to_vec();
        let mut caches = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let (out, c) = l.forward(&seq);
            caches.push(c);
            seq = out;
        }
        (seq, StackCache { layers: caches })
    }

    pub fn backward(&self, cache: &StackCache, dh_top: &[Array2<f64>], grads: &mut RecurrentStack) -> Vec<Array2<f64>> {
        let mut d = dh_top.to_vec();
        for i in (0..self.layers.len()).rev() {
            d = self.layers[i].backward(&cache.layers[i], &d, &mut grads.layers[i]);
        }
        d
    }
}

impl Params for RecurrentStack {
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

//! Strided 1-D convolution and its transpose, "same" padding.
//!
//! Tensors are `batch × channels × length`. A stride-`s` convolution maps
//! length `L` to `ceil(L / s)`; the transpose maps `M` to `s · M`. Padding
//! follows the usual "same" split: `max((out − 1)·s + k − L, 0)` total, with
//! the smaller half on the left.

use ndarray::{Array1, Array3};
use serde::{Deserialize, Serialize};

use super::{glorot_uniform, slice1, slice1_mut, slice3, slice3_mut, Params};
use crate::rng::Rng;

fn pad_left(long: usize, short: usize, stride: usize, kernel: usize) -> usize {
    ((short.saturating_sub(1)) * stride + kernel).saturating_sub(long) / 2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conv1d {
    /// `out_channels × in_channels × kernel`.
    pub w: Array3<f64>,
    pub b: Array1<f64>,
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvTranspose1d {
    /// `in_channels × out_channels × kernel`.
    pub w: Array3<f64>,
    pub b: Array1<f64>,
    pub stride: usize,
}

impl Conv1d {
    pub fn new(in_ch: usize, out_ch: usize, kernel: usize, stride: usize, rng: &mut Rng) -> Self {
        let w = glorot_uniform(in_ch * kernel, out_ch * kernel, out_ch * in_ch * kernel, rng);
        Conv1d {
            w: Array3::from_shape_vec((out_ch, in_ch, kernel), w).expect("shape"),
            b: Array1::zeros(out_ch),
            stride,
        }
    }

    pub fn output_len(&self, len: usize) -> usize {
        len.div_ceil(self.stride)
    }

    pub fn forward(&self, x: &Array3<f64>) -> Array3<f64> {
        let (batch, in_ch, len) = x.dim();
        let (out_ch, w_in, k) = self.w.dim();
        assert_eq!(in_ch, w_in, "conv input channels");
        let out_len = self.output_len(len);
        let pad = pad_left(len, out_len, self.stride, k) as isize;
        let xs = slice3(x);
        let ws = slice3(&self.w);
        let mut y = Array3::zeros((batch, out_ch, out_len));
        let ys = slice3_mut(&mut y);
        for b in 0..batch {
            for co in 0..out_ch {
                for o in 0..out_len {
                    let mut acc = self.b[co];
                    let base = (o * self.stride) as isize - pad;
                    for ci in 0..in_ch {
                        let xrow = &xs[(b * in_ch + ci) * len..(b * in_ch + ci + 1) * len];
                        let wrow = &ws[(co * in_ch + ci) * k..(co * in_ch + ci + 1) * k];
                        for (j, wv) in wrow.iter().enumerate() {
                            let i = base + j as isize;
                            if i >= 0 && (i as usize) < len {
                                acc += wv * xrow[i as usize];
                            }
                        }
                    }
                    ys[(b * out_ch + co) * out_len + o] = acc;
                }
            }
        }
        y
    }

    /// Accumulates parameter gradients; returns dL/dx.
    pub fn backward(&self, x: &Array3<f64>, grad_out: &Array3<f64>, grads: &mut Conv1d) -> Array3<f64> {
        let (batch, in_ch, len) = x.dim();
        let (out_ch, _, k) = self.w.dim();
        let out_len = grad_out.dim().2;
        let pad = pad_left(len, out_len, self.stride, k) as isize;
        let xs = slice3(x);
        let gs = slice3(grad_out);
        let ws = slice3(&self.w);
        let mut dx = Array3::zeros((batch, in_ch, len));
        let dxs = slice3_mut(&mut dx);
        let gw = slice3_mut(&mut grads.w);
        for b in 0..batch {
            for co in 0..out_ch {
                for o in 0..out_len {
                    let g = gs[(b * out_ch + co) * out_len + o];
                    if g == 0.0 {
                        continue;
                    }
                    grads.b[co] += g;
                    let base = (o * self.stride) as isize - pad;
                    for ci in 0..in_ch {
                        for j in 0..k {
                            let i = base + j as isize;
                            if i >= 0 && (i as usize) < len {
                                let xi = (b * in_ch + ci) * len + i as usize;
                                let wi = (co * in_ch + ci) * k + j;
                                gw[wi] += g * xs[xi];
                                dxs[xi] += g * ws[wi];
                            }
                        }
                    }
                }
            }
        }
        dx
    }
}

impl ConvTranspose1d {
    pub fn new(in_ch: usize, out_ch: usize, kernel: usize, stride: usize, rng: &mut Rng) -> Self {
        let w = glorot_uniform(in_ch * kernel, out_ch * kernel, in_ch * out_ch * kernel, rng);
        ConvTranspose1d {
            w: Array3::from_shape_vec((in_ch, out_ch, kernel), w).expect("shape"),
            b: Array1::zeros(out_ch),
            stride,
        }
    }

    pub fn output_len(&self, len: usize) -> usize {
        len * self.stride
    }

    pub fn forward(&self, x: &Array3<f64>) -> Array3<f64> {
        let (batch, in_ch, len) = x.dim();
        let (w_in, out_ch, k) = self.w.dim();
        assert_eq!(in_ch, w_in, "transposed conv input channels");
        let out_len = self.output_len(len);
        let pad = pad_left(out_len, len, self.stride, k) as isize;
        let xs = slice3(x);
        let ws = slice3(&self.w);
        let mut y = Array3::zeros((batch, out_ch, out_len));
        let ys = slice3_mut(&mut y);
        for b in 0..batch {
            for co in 0..out_ch {
                ys[(b * out_ch + co) * out_len..(b * out_ch + co + 1) * out_len].fill(self.b[co]);
            }
            for ci in 0..in_ch {
                for o in 0..len {
                    let v = xs[(b * in_ch + ci) * len + o];
                    let base = (o * self.stride) as isize - pad;
                    for co in 0..out_ch {
                        let wrow = &ws[(ci * out_ch + co) * k..(ci * out_ch + co + 1) * k];
                        let yrow = (b * out_ch + co) * out_len;
                        for (j, wv) in wrow.iter().enumerate() {
                            let i = base + j as isize;
                            if i >= 0 && (i as usize) < out_len {
                                ys[yrow + i as usize] += wv * v;
                            }
                        }
                    }
                }
            }
        }
        y
    }

    pub fn backward(&self, x: &Array3<f64>, grad_out: &Array3<f64>, grads: &mut ConvTranspose1d) -> Array3<f64> {
        let (batch, in_ch, len) = x.dim();
        let (_, out_ch, k) = self.w.dim();
        let out_len = grad_out.dim().2;
        let pad = pad_left(out_len, len, self.stride, k) as isize;
        let xs = slice3(x);
        let gs = slice3(grad_out);
        let ws = slice3(&self.w);
        let mut dx = Array3::zeros((batch, in_ch, len));
        let dxs = slice3_mut(&mut dx);
        for b in 0..batch {
            for co in 0..out_ch {
                grads.b[co] += gs[(b * out_ch + co) * out_len..(b * out_ch + co + 1) * out_len]
                    .iter()
                    .sum::<f64>();
            }
        }
        let gw = slice3_mut(&mut grads.w);
        for b in 0..batch {
            for ci in 0..in_ch {
                for o in 0..len {
                    let xi = (b * in_ch + ci) * len + o;
                    let v = xs[xi];
                    let base = (o * self.stride) as isize - pad;
                    let mut acc = 0.0;
                    for co in 0..out_ch {
                        let grow = (b * out_ch + co) * out_len;
                        for j in 0..k {
                            let i = base + j as isize;
                            if i >= 0 && (i as usize) < out_len {
                                let g = gs[grow + i as usize];
                                let wi = (ci * out_ch + co) * k + j;
                                gw[wi] += g * v;
                                acc += g * ws[wi];
                            }
                        }
                    }
                    dxs[xi] += acc;
                }
            }
        }
        dx
    }
}

macro_rules! impl_params {
    ($t:ty) => {
        impl Params for $t {
            fn visit(&self, f: &mut dyn FnMut(&[f64])) {
                f(slice3(&self.w));
                f(slice1(&self.b));
            }
            fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
                f(slice3_mut(&mut self.w));
                f(slice1_mut(&mut self.b));
            }
        }
    };
}
impl_params!(Conv1d);
impl_params!(ConvTranspose1d);

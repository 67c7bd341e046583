//! A small fully connected network with ReLU hidden layers and a linear
//! head, written directly against `Vec<f64>` so the whole training stack
//! stays dependency-free and bit-reproducible.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// One dense layer. Weights are row-major, `out_dim` rows of `in_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Layer {
    fn affine(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.in_dim);
        let mut z = self.b.clone();
        for (row, zr) in z.iter_mut().enumerate() {
            let w = &self.w[row * self.in_dim..(row + 1) * self.in_dim];
            let mut acc = 0.0;
            for (wi, xi) in w.iter().zip(x) {
                acc += wi * xi;
            }
            *zr += acc;
        }
        z
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// Per-layer forward state needed to run the backward pass: the input to
/// each layer and each pre-activation.
pub struct Trace {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

/// Gradients with the same shape as the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub dw: Vec<f64>,
    pub db: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Gradients {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad { dw: vec![0.0; l.w.len()], db: vec![0.0; l.b.len()] })
                .collect(),
        }
    }

    pub fn add(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.dw.iter_mut().zip(&b.dw) {
                *x += y;
            }
            for (x, y) in a.db.iter_mut().zip(&b.db) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, k: f64) {
        for l in &mut self.layers {
            for x in &mut l.dw {
                *x *= k;
            }
            for x in &mut l.db {
                *x *= k;
            }
        }
    }
}

fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

impl Mlp {
    /// He-uniform initialization over the given layer sizes, e.g.
    /// `[32, 256, 128, 21]`.
    pub fn new(dims: &[usize], rng: &mut impl Rng) -> Mlp {
        assert!(dims.len() >= 2, "need at least input and output dims");
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for pair in dims.windows(2) {
            let (in_dim, out_dim) = (pair[0], pair[1]);
            let limit = (6.0 / in_dim as f64).sqrt();
            let w = (0..in_dim * out_dim).map(|_| rng.gen_range(-limit..limit)).collect();
            layers.push(Layer { in_dim, out_dim, w, b: vec![0.0; out_dim] });
        }
        Mlp { layers }
    }

    pub fn in_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.in_dim()];
        d.extend(self.layers.iter().map(|l| l.out_dim));
        d
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let last = self.layers.len() - 1;
        let mut a = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.affine(&a);
            if i < last {
                for v in &mut z {
                    *v = relu(*v);
                }
            }
            a = z;
        }
        a
    }

    /// Forward pass that keeps what backprop needs.
    pub fn forward_trace(&self, x: &[f64]) -> (Vec<f64>, Trace) {
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            inputs.push(a.clone());
            let z = layer.affine(&a);
            pre.push(z.clone());
            a = if i < last { z.iter().map(|v| relu(*v)).collect() } else { z };
        }
        (a, Trace { inputs, pre })
    }

    /// Backpropagate `dl_dout` (gradient of the loss in the network output)
    /// through the trace. Returns gradients for one sample; accumulate and
    /// scale externally for batches.
    pub fn backward(&self, trace: &Trace, dl_dout: &[f64]) -> Gradients {
        let mut grads = Gradients::zeros_like(self);
        let mut delta = dl_dout.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = &trace.inputs[l];
            let g = &mut grads.layers[l];
            for row in 0..layer.out_dim {
                let d = delta[row];
                g.db[row] = d;
                let dw = &mut g.dw[row * layer.in_dim..(row + 1) * layer.in_dim];
                for (slot, xi) in dw.iter_mut().zip(input) {
                    *slot = d * xi;
                }
            }
            if l > 0 {
                let mut prev = vec![0.0; layer.in_dim];
                for row in 0..layer.out_dim {
                    let d = delta[row];
                    let w = &layer.w[row * layer.in_dim..(row + 1) * layer.in_dim];
                    for (p, wi) in prev.iter_mut().zip(w) {
                        *p += d * wi;
                    }
                }
                // The previous layer's output went through ReLU.
                for (p, z) in prev.iter_mut().zip(&trace.pre[l - 1]) {
                    if *z <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
        grads
    }

    /// Visit every parameter mutably in a fixed order (layer by layer,
    /// weights then biases). The optimizer and checkpointing both rely on
    /// this order being stable.
    pub fn for_each_param_mut(&mut self, mut f: impl FnMut(usize, &mut f64)) {
        let mut idx = 0;
        for l in &mut self.layers {
            for w in &mut l.w {
                f(idx, w);
                idx += 1;
            }
            for b in &mut l.b {
                f(idx, b);
                idx += 1;
            }
        }
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.w);
            out.extend_from_slice(&l.b);
        }
        out
    }

    pub fn set_flat_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.param_count());
        let mut it = params.iter();
        for l in &mut self.layers {
            for w in &mut l.w {
                *w = *it.next().unwrap();
            }
            for b in &mut l.b {
                *b = *it.next().unwrap();
            }
        }
    }
}

impl Gradients {
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(&l.dw);
            out.extend_from_slice(&l.db);
        }
        out
    }
}

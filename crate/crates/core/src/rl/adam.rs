//! Adam with bias correction, matched one-to-one to the network's parameter
//! layout.

use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, Mlp};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(net: &Mlp) -> AdamState {
        let n = net.param_count();
        AdamState { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    /// One update with the standard bias-corrected moments.
    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients, lr: f64) {
        self.t += 1;
        let g = grads.flat();
        assert_eq!(g.len(), self.m.len(), "gradient and optimizer shapes differ");
        let bc1 = 1.0 - BETA1.powi(self.t as i32);
        let bc2 = 1.0 - BETA2.powi(self.t as i32);
        let m = &mut self.m;
        let v = &mut self.v;
        net.for_each_param_mut(|i, p| {
            m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
            v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + EPS);
        });
    }
}

use serde::{Deserialize, Serialize};

use super::DenoiserParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First/second moment accumulators shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OptState {
    pub(crate) m: DenoiserParams,
    pub(crate) v: DenoiserParams,
    pub(crate) step: u64,
}

impl OptState {
    pub fn new(params: &DenoiserParams) -> Self {
        Self { m: params.zeros_like(), v: params.zeros_like(), step: 0 }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &DenoiserParams {
        &self.m
    }

    pub fn second_moment(&self) -> &DenoiserParams {
        &self.v
    }
}

/// Bias-corrected adaptive-moment update, in place.
pub fn adam_step(params: &mut DenoiserParams, grads: &DenoiserParams, opt: &mut OptState, cfg: &AdamConfig) {
    opt.step += 1;
    let t = opt.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    let grads = grads.tensors();
    let ms = opt.m.tensors_mut();
    let vs = opt.v.tensors_mut();
    for (((p, g), m), v) in params.tensors_mut().into_iter().zip(grads).zip(ms).zip(vs) {
        for i in 0..p.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}

//! Partial-diffusion assistance.
//!
//! The pilot action is diffused forward to the switching step `k_sw` and then
//! denoised back to step 0 under the state-conditioned model.

use std::sync::Arc;

use ndarray::{s, Array2, ArrayView2};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::denoiser::{Checkpoint, DenoiserParams};
use crate::diffusion::{switch_step, NoiseSchedule};
use crate::error::{check_dim, Error, Result};
use crate::rng::Rng;

/// A trained denoiser with its schedule and observation standardization.
#[derive(Debug, Clone)]
pub struct DiffusionModel {
    params: DenoiserParams,
    sched: NoiseSchedule,
    obs_mean: Vec<f64>,
    obs_std: Vec<f64>,
    env: Option<String>,
}

impl DiffusionModel {
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let m = &ckpt.meta;
        let sched = m.schedule()?;
        let (obs_mean, obs_std) = if m.obs_mean.is_empty() {
            (vec![0.0; m.state_dim], vec![1.0; m.state_dim])
        } else {
            (m.obs_mean.clone(), m.obs_std.clone())
        };
        if obs_std.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Format("observation std must be positive".into()));
        }
        Ok(Self { params: ckpt.params.clone(), sched, obs_mean, obs_std, env: m.env.clone() })
    }

    pub fn params(&self) -> &DenoiserParams {
        &self.params
    }

    pub fn schedule(&self) -> &NoiseSchedule {
        &self.sched
    }

    pub fn state_dim(&self) -> usize {
        self.params.state_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.params.action_dim()
    }

    /// Environment name the model was trained for, if any.
    pub fn env(&self) -> Option<&str> {
        self.env.as_deref()
    }

    /// Writes standardized `states` into the leading columns of `x`.
    fn normalize_into(&self, states: ArrayView2<f64>, x: &mut Array2<f64>) {
        for ((i, j), v) in states.indexed_iter() {
            x[[i, j]] = (v - self.obs_mean[j]) / self.obs_std[j];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopilotConfig {
    pub gamma: f64,
    /// At `k_sw = 0`, apply the final mean-only denoise instead of returning
    /// the pilot action untouched.
    pub denoise_at_zero: bool,
    /// Per-coordinate output box; `None` leaves outputs unclamped.
    pub clamp: Option<(f64, f64)>,
}

impl Default for CopilotConfig {
    fn default() -> Self {
        Self { gamma: 0.4, denoise_at_zero: false, clamp: Some((-1.0, 1.0)) }
    }
}

impl CopilotConfig {
    pub fn with_gamma(gamma: f64) -> Self {
        Self { gamma, ..Self::default() }
    }
}

/// Instrumentation for one assist call (or one batched call).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AssistTrace {
    pub k_sw: usize,
    /// Network evaluations performed on the reverse chain.
    pub reverse_steps: usize,
    /// Largest Euclidean norm of any predicted noise vector.
    pub max_eps_norm: f64,
}

#[derive(Debug, Clone)]
pub struct Copilot {
    model: Arc<DiffusionModel>,
    cfg: CopilotConfig,
    k_sw: usize,
}

impl Copilot {
    pub fn new(model: Arc<DiffusionModel>, cfg: CopilotConfig) -> Result<Self> {
        let k_sw = switch_step(cfg.gamma, model.sched.steps())?;
        if let Some((lo, hi)) = cfg.clamp {
            if !(lo < hi) {
                return Err(Error::Config("clamp bounds need low < high".into()));
            }
        }
        Ok(Self { model, cfg, k_sw })
    }

    pub fn from_checkpoint(ckpt: &Checkpoint, cfg: CopilotConfig) -> Result<Self> {
        Self::new(Arc::new(DiffusionModel::from_checkpoint(ckpt)?), cfg)
    }

    /// Same model under a different forward diffusion ratio.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.model.clone(), CopilotConfig { gamma, ..self.cfg })
    }

    pub fn model(&self) -> &Arc<DiffusionModel> {
        &self.model
    }

    pub fn config(&self) -> &CopilotConfig {
        &self.cfg
    }

    pub fn gamma(&self) -> f64 {
        self.cfg.gamma
    }

    pub fn k_sw(&self) -> usize {
        self.k_sw
    }

    /// Shared action for one goal-stripped observation `s` and pilot action.
    pub fn assist(&self, s: &[f64], a_pilot: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
        Ok(self.assist_traced(s, a_pilot, rng)?.0)
    }

    pub fn assist_traced(&self, s: &[f64], a_pilot: &[f64], rng: &mut Rng) -> Result<(Vec<f64>, AssistTrace)> {
        check_dim(self.model.state_dim(), s.len())?;
        check_dim(self.model.action_dim(), a_pilot.len())?;
        let states = ArrayView2::from_shape((1, s.len()), s).expect("row view");
        let actions = ArrayView2::from_shape((1, a_pilot.len()), a_pilot).expect("row view");
        let (out, trace) = self.assist_batch(states, actions, std::slice::from_mut(rng))?;
        Ok((out.into_raw_vec_and_offset().0, trace))
    }

    /// Row `i` draws all of its noise from `rngs[i]`, so each row sees the
    /// same random numbers it would in a separate call.
    pub fn assist_batch(
        &self,
        states: ArrayView2<f64>,
        actions: ArrayView2<f64>,
        rngs: &mut [Rng],
    ) -> Result<(Array2<f64>, AssistTrace)> {
        let m = &*self.model;
        let (sd, ad) = (m.state_dim(), m.action_dim());
        let n = actions.nrows();
        check_dim(sd, states.ncols())?;
        check_dim(ad, actions.ncols())?;
        check_dim(n, states.nrows())?;
        check_dim(n, rngs.len())?;
        if let Some((lo, hi)) = self.cfg.clamp {
            if actions.iter().any(|a| !(lo..=hi).contains(a)) {
                return Err(Error::Contract("pilot action outside the action bounds".into()));
            }
        }
        let mut trace = AssistTrace { k_sw: self.k_sw, ..AssistTrace::default() };
        if self.k_sw == 0 && !self.cfg.denoise_at_zero {
            return Ok((actions.to_owned(), trace));
        }

        let sched = &m.sched;
        let mut x = Array2::zeros((n, sd + ad));
        m.normalize_into(states, &mut x);
        let top = self.k_sw.max(1);
        {
            let ab = if self.k_sw == 0 { 1.0 } else { sched.alpha_bar(self.k_sw) };
            let (ca, ce) = (ab.sqrt(), (1.0 - ab).sqrt());
            for i in 0..n {
                for j in 0..ad {
                    let eps: f64 = if self.k_sw == 0 { 0.0 } else { rngs[i].sample(StandardNormal) };
                    x[[i, sd + j]] = ca * actions[[i, j]] + ce * eps;
                }
            }
        }
        let mut ks = vec![0usize; n];
        for k in (1..=top).rev() {
            ks.fill(k);
            let out = m.params.forward_batch(x.view(), &ks)?;
            trace.reverse_steps += 1;
            let inv_sqrt_alpha = 1.0 / sched.alpha(k).sqrt();
            let eps_coef = sched.beta(k) / (1.0 - sched.alpha_bar(k)).sqrt();
            let sigma = sched.sigma(k);
            for i in 0..n {
                let mut norm2 = 0.0;
                for j in 0..ad {
                    let e = out[[i, sd + j]];
                    norm2 += e * e;
                    let mean = inv_sqrt_alpha * (x[[i, sd + j]] - eps_coef * e);
                    x[[i, sd + j]] = if k > 1 { mean + sigma * rngs[i].sample::<f64, _>(StandardNormal) } else { mean };
                }
                trace.max_eps_norm = trace.max_eps_norm.max(norm2.sqrt());
            }
        }
        let mut result = x.slice(s![.., sd..]).to_owned();
        if let Some((lo, hi)) = self.cfg.clamp {
            result.mapv_inplace(|v| if v.is_finite() { v.clamp(lo, hi) } else { 0.0 });
        }
        Ok((result, trace))
    }

    /// Evaluates the noise predictor on every row and step and returns the
    /// largest Euclidean norm of its action output.
    pub fn eps_sup_norm(&self, states: ArrayView2<f64>, actions: ArrayView2<f64>) -> Result<f64> {
        let m = &*self.model;
        let (sd, ad) = (m.state_dim(), m.action_dim());
        check_dim(sd, states.ncols())?;
        check_dim(ad, actions.ncols())?;
        let n = actions.nrows();
        let mut x = Array2::zeros((n, sd + ad));
        m.normalize_into(states, &mut x);
        for i in 0..n {
            for j in 0..ad {
                x[[i, sd + j]] = actions[[i, j]];
            }
        }
        let mut sup: f64 = 0.0;
        for k in 1..=m.sched.steps() {
            let out = m.params.forward_batch(x.view(), &vec![k; n])?;
            for row in out.rows() {
                let norm = row.iter().skip(sd).map(|e| e * e).sum::<f64>().sqrt();
                sup = sup.max(norm);
            }
        }
        Ok(sup)
    }
}

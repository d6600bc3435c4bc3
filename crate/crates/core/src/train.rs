//! Denoiser training loop over a demonstration dataset.

use ndarray::{Array2, Axis};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::demos::Dataset;
use crate::denoiser::{adam_step, AdamConfig, Checkpoint, CheckpointMeta, DenoiserParams, OptState, DEFAULT_HIDDEN};
use crate::diffusion::{NoiseSchedule, DEFAULT_BETA_MAX, DEFAULT_BETA_MIN, DEFAULT_STEPS};
use crate::env::EnvKind;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub steps: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    pub hidden: usize,
    pub adam: AdamConfig,
    /// Final learning rate as a fraction of `adam.lr`, reached by cosine
    /// decay over `total_steps`. `1` keeps the rate constant.
    pub lr_floor: f64,
    /// Decay of the weight average written to the checkpoint. `0` writes
    /// the last iterate. Saved optimizer moments always belong to the
    /// last iterate.
    pub ema_decay: f64,
    pub batch: usize,
    pub total_steps: usize,
    /// Loss is reported every this many gradient steps.
    pub eval_interval: usize,
    pub seed: u64,
    pub keep_optimizer: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: DEFAULT_STEPS,
            beta_min: DEFAULT_BETA_MIN,
            beta_max: DEFAULT_BETA_MAX,
            hidden: DEFAULT_HIDDEN,
            adam: AdamConfig::default(),
            lr_floor: 0.05,
            ema_decay: 0.0,
            batch: 256,
            total_steps: 50_000,
            eval_interval: 1000,
            seed: 0,
            keep_optimizer: false,
        }
    }
}

impl TrainConfig {
    /// Defaults with the gradient-step budget for `env`.
    pub fn for_env(env: EnvKind) -> Self {
        let total_steps = match env {
            EnvKind::PointMass2d => 50_000,
            EnvKind::SimpleLander => 150_000,
        };
        Self { total_steps, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.batch == 0 || self.eval_interval == 0 {
            return Err(Error::Config("hidden, batch and eval_interval must be positive".into()));
        }
        if !(self.adam.lr > 0.0) || !(0.0..1.0).contains(&self.adam.beta1) || !(0.0..1.0).contains(&self.adam.beta2) {
            return Err(Error::Config("invalid optimizer settings".into()));
        }
        if !(0.0..=1.0).contains(&self.lr_floor) {
            return Err(Error::Config(format!("lr_floor must lie in [0, 1], got {}", self.lr_floor)));
        }
        if !(0.0..1.0).contains(&self.ema_decay) {
            return Err(Error::Config(format!("ema_decay must lie in [0, 1), got {}", self.ema_decay)));
        }
        self.schedule().map(|_| ())
    }

    pub fn schedule(&self) -> Result<NoiseSchedule> {
        NoiseSchedule::sigmoid(self.steps, self.beta_min, self.beta_max)
    }

    /// Learning rate used for gradient step `step` (0-based).
    pub fn lr_at(&self, step: usize) -> f64 {
        let t = step as f64 / self.total_steps.max(1) as f64;
        let cos = 0.5 * (1.0 + (std::f64::consts::PI * t).cos());
        self.adam.lr * (self.lr_floor + (1.0 - self.lr_floor) * cos)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub checkpoint: Checkpoint,
    /// Minibatch loss before each gradient step.
    pub losses: Vec<f64>,
}

impl TrainOutput {
    /// `step,loss` rows at the configured interval plus the final step.
    pub fn loss_csv(&self, interval: usize) -> String {
        let mut out = String::from("step,loss\n");
        let last = self.losses.len().saturating_sub(1);
        for (i, l) in self.losses.iter().enumerate() {
            if i % interval.max(1) == 0 || i == last {
                out.push_str(&format!("{i},{}\n", crate::eval::fmt_g(*l)));
            }
        }
        out
    }
}

pub fn train(ds: &Dataset, cfg: &TrainConfig) -> Result<TrainOutput> {
    train_with(ds, cfg, |_, _| {})
}

/// Trains and calls `progress(step, loss)` every `eval_interval` steps.
pub fn train_with(ds: &Dataset, cfg: &TrainConfig, mut progress: impl FnMut(usize, f64)) -> Result<TrainOutput> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::Config("dataset is empty".into()));
    }
    let h = &ds.header;
    let sched = cfg.schedule()?;
    let (states, actions) = normalized_columns(ds);

    let mut params = DenoiserParams::init(h.state_dim, h.action_dim, cfg.hidden, cfg.steps, derive_seed(cfg.seed, stream::INIT));
    let mut opt = OptState::new(&params);
    let mut ema = (cfg.ema_decay > 0.0).then(|| params.clone());
    let mut rng = rng_from(cfg.seed, stream::TRAIN);
    let mut losses = Vec::with_capacity(cfg.total_steps);
    let mut idx = vec![0usize; cfg.batch];
    for step in 0..cfg.total_steps {
        for i in idx.iter_mut() {
            *i = rng.random_range(0..ds.len());
        }
        let bs = states.select(Axis(0), &idx);
        let ba = actions.select(Axis(0), &idx);
        let (loss, grads) = params.loss_and_grad(bs.view(), ba.view(), &sched, &mut rng)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { step, loss });
        }
        let adam = AdamConfig { lr: cfg.lr_at(step), ..cfg.adam };
        adam_step(&mut params, &grads, &mut opt, &adam);
        if let Some(avg) = ema.as_mut() {
            // Warm-up keeps early averages from being dominated by the init.
            let d = cfg.ema_decay.min((1 + step) as f64 / (10 + step) as f64);
            for (m, p) in avg.tensors_mut().into_iter().zip(params.tensors()) {
                for (mv, pv) in m.iter_mut().zip(p) {
                    *mv = d * *mv + (1.0 - d) * pv;
                }
            }
        }
        losses.push(loss);
        if step % cfg.eval_interval == 0 {
            progress(step, loss);
        }
    }
    if !params.is_finite() {
        return Err(Error::Diverged { step: cfg.total_steps, loss: f64::NAN });
    }

    let meta = CheckpointMeta {
        state_dim: h.state_dim,
        action_dim: h.action_dim,
        h_dim: cfg.hidden,
        steps: cfg.steps,
        beta_min: cfg.beta_min,
        beta_max: cfg.beta_max,
        seed: cfg.seed,
        train_step: cfg.total_steps as u64,
        env: h.env.map(|e| e.to_string()),
        obs_mean: h.obs_mean.clone(),
        obs_std: h.obs_std.clone(),
        has_optimizer: cfg.keep_optimizer,
    };
    let opt = cfg.keep_optimizer.then_some(opt);
    let params = ema.unwrap_or(params);
    Ok(TrainOutput { checkpoint: Checkpoint { meta, params, opt }, losses })
}

fn normalized_columns(ds: &Dataset) -> (Array2<f64>, Array2<f64>) {
    let h = &ds.header;
    let mut states = Array2::zeros((ds.len(), h.state_dim));
    let mut actions = Array2::zeros((ds.len(), h.action_dim));
    for i in 0..ds.len() {
        for (j, v) in ds.state(i).iter().enumerate() {
            states[[i, j]] = (v - h.obs_mean[j]) / h.obs_std[j];
        }
        for (j, v) in ds.action(i).iter().enumerate() {
            actions[[i, j]] = *v;
        }
    }
    (states, actions)
}

/// Trailing-window mean of `xs` (window clipped at the start).
pub fn smoothed(xs: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    for i in 0..xs.len() {
        acc += xs[i];
        if i >= w {
            acc -= xs[i - w];
        }
        out.push(acc / (i + 1).min(w) as f64);
    }
    out
}

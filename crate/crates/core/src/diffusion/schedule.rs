use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Precomputed per-step coefficients of a variance-preserving diffusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    beta_min: f64,
    beta_max: f64,
    beta: Vec<f64>,
    alpha: Vec<f64>,
    alpha_bar: Vec<f64>,
    sigma: Vec<f64>,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl NoiseSchedule {
    /// Sigmoid schedule: `beta_k = logistic(l_k) * (beta_max - beta_min) + beta_min`
    /// with `l_1..l_K` evenly spaced over `[-6, 6]`.
    pub fn sigmoid(steps: usize, beta_min: f64, beta_max: f64) -> Result<Self> {
        if steps < 2 {
            return Err(Error::Config(format!("need at least 2 diffusion steps, got {steps}")));
        }
        if !(beta_min > 0.0 && beta_min < beta_max && beta_max < 1.0) {
            return Err(Error::Config(format!(
                "beta range must satisfy 0 < beta_min < beta_max < 1, got [{beta_min}, {beta_max}]"
            )));
        }
        let span = beta_max - beta_min;
        let beta = (0..steps)
            .map(|i| {
                let l = -6.0 + 12.0 * i as f64 / (steps - 1) as f64;
                logistic(l) * span + beta_min
            })
            .collect();
        Ok(Self::from_betas(beta_min, beta_max, beta))
    }

    fn from_betas(beta_min: f64, beta_max: f64, beta: Vec<f64>) -> Self {
        let alpha: Vec<f64> = beta.iter().map(|b| 1.0 - b).collect();
        let mut alpha_bar = Vec::with_capacity(alpha.len());
        let mut acc = 1.0;
        for a in &alpha {
            acc *= a;
            alpha_bar.push(acc);
        }
        // sigma_k^2 = beta_k
        let sigma = beta.iter().map(|b| b.sqrt()).collect();
        Self { beta_min, beta_max, beta, alpha, alpha_bar, sigma }
    }

    /// Number of diffusion steps `K`.
    pub fn steps(&self) -> usize {
        self.beta.len()
    }

    pub fn beta_min(&self) -> f64 {
        self.beta_min
    }

    pub fn beta_max(&self) -> f64 {
        self.beta_max
    }

    fn index(&self, k: usize) -> usize {
        assert!(k >= 1 && k <= self.steps(), "diffusion step {k} outside [1, {}]", self.steps());
        k - 1
    }

    pub fn beta(&self, k: usize) -> f64 {
        self.beta[self.index(k)]
    }

    pub fn alpha(&self, k: usize) -> f64 {
        self.alpha[self.index(k)]
    }

    /// Cumulative product `alpha_1 * ... * alpha_k`; `alpha_bar(0) == 1`.
    pub fn alpha_bar(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.alpha_bar[self.index(k)]
        }
    }

    pub fn sigma(&self, k: usize) -> f64 {
        self.sigma[self.index(k)]
    }

    pub fn betas(&self) -> &[f64] {
        &self.beta
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bar
    }

    pub(crate) fn check_step(&self, k: usize, lo: usize) -> Result<()> {
        if k < lo || k > self.steps() {
            Err(Error::StepOutOfRange { k, lo, hi: self.steps() })
        } else {
            Ok(())
        }
    }
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        Self::sigmoid(super::DEFAULT_STEPS, super::DEFAULT_BETA_MIN, super::DEFAULT_BETA_MAX)
            .expect("default schedule is valid")
    }
}

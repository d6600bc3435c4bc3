use super::NoiseSchedule;
use crate::error::{check_dim, Error, Result};

fn axpby(a: f64, x: &[f64], b: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| a * xi + b * yi).collect()
}

/// Closed-form `q(x_k | x_0)` sample: `sqrt(ab_k) x0 + sqrt(1 - ab_k) eps`.
pub fn forward_diffuse(x0: &[f64], k: usize, eps: &[f64], sched: &NoiseSchedule) -> Result<Vec<f64>> {
    check_dim(x0.len(), eps.len())?;
    sched.check_step(k, 0)?;
    if k == 0 {
        return Ok(x0.to_vec());
    }
    let ab = sched.alpha_bar(k);
    Ok(axpby(ab.sqrt(), x0, (1.0 - ab).sqrt(), eps))
}

/// One Markov step `x_k = sqrt(alpha_k) x_{k-1} + sqrt(1 - alpha_k) eps`.
pub fn forward_step(x_prev: &[f64], k: usize, eps: &[f64], sched: &NoiseSchedule) -> Result<Vec<f64>> {
    check_dim(x_prev.len(), eps.len())?;
    sched.check_step(k, 1)?;
    let a = sched.alpha(k);
    Ok(axpby(a.sqrt(), x_prev, (1.0 - a).sqrt(), eps))
}

/// Mean of `p(x_{k-1} | x_k)` parameterized by the predicted noise.
pub fn posterior_mean_from_eps(
    x_k: &[f64],
    k: usize,
    eps_hat: &[f64],
    sched: &NoiseSchedule,
) -> Result<Vec<f64>> {
    check_dim(x_k.len(), eps_hat.len())?;
    sched.check_step(k, 1)?;
    let inv_sqrt_alpha = 1.0 / sched.alpha(k).sqrt();
    let eps_coef = sched.beta(k) / (1.0 - sched.alpha_bar(k)).sqrt();
    Ok(x_k
        .iter()
        .zip(eps_hat)
        .map(|(x, e)| inv_sqrt_alpha * (x - eps_coef * e))
        .collect())
}

/// Ancestral step to `x_{k-1}`. At `k = 1` the noise `z` must be zero.
pub fn reverse_step(
    x_k: &[f64],
    k: usize,
    eps_hat: &[f64],
    z: &[f64],
    sched: &NoiseSchedule,
) -> Result<Vec<f64>> {
    check_dim(x_k.len(), z.len())?;
    let mut mean = posterior_mean_from_eps(x_k, k, eps_hat, sched)?;
    if k == 1 {
        if z.iter().any(|&v| v != 0.0) {
            return Err(Error::Contract("reverse step at k = 1 takes no noise".into()));
        }
        return Ok(mean);
    }
    let s = sched.sigma(k);
    for (m, zi) in mean.iter_mut().zip(z) {
        *m += s * zi;
    }
    Ok(mean)
}

/// Switching step `k_sw = round(gamma * K)`, rounding half away from zero.
pub fn switch_step(gamma: f64, steps: usize) -> Result<usize> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Config(format!("forward diffusion ratio must lie in [0, 1], got {gamma}")));
    }
    let k = (gamma * steps as f64).round() as usize;
    Ok(k.min(steps))
}

/// High-probability bound on the squared displacement after `k_sw` forward
/// and `k_sw` reverse steps, for a noise predictor with `‖eps‖ <= lip`.
pub fn displacement_bound(
    k_sw: usize,
    lip: f64,
    dim: usize,
    delta: f64,
    sched: &NoiseSchedule,
) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!("delta must lie in (0, 1), got {delta}")));
    }
    if lip < 0.0 {
        return Err(Error::Config(format!("noise bound must be non-negative, got {lip}")));
    }
    if dim == 0 {
        return Err(Error::Config("dimension must be positive".into()));
    }
    sched.check_step(k_sw, 1)?;
    let s2 = sched.sigma(k_sw).powi(2);
    let d = dim as f64;
    let log_delta = delta.ln();
    Ok(s2 * (lip * s2 + d + 2.0 * (-d * log_delta).sqrt() - 2.0 * log_delta))
}

//! Diffusion kernel: noise schedule, forward/reverse steps, and the
//! partial-diffusion switching arithmetic.
//!
//! Diffusion steps are 1-indexed at this boundary (`k ∈ [1, K]`, with
//! `k = 0` meaning "no noise" where allowed). Storage is 0-based.

mod process;
mod schedule;

pub use process::{
    displacement_bound, forward_diffuse, forward_step, posterior_mean_from_eps, reverse_step,
    switch_step,
};
pub use schedule::NoiseSchedule;

/// Defaults used throughout the crate.
pub const DEFAULT_STEPS: usize = 50;
pub const DEFAULT_BETA_MIN: f64 = 1e-4;
pub const DEFAULT_BETA_MAX: f64 = 0.26;

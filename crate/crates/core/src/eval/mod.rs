//! Evaluation: seeded rollouts, (pilot × γ) sweeps and the 2D transform
//! experiment.

mod report;
mod runner;
mod transform;

pub use report::{fmt_g, CellStats, MeanStd, SweepReport};
pub use runner::{run_batch, run_episode, EpisodeRecord};
pub use transform::{
    nearest_mode_dist2, sample_source, sample_target, synth2d_dataset, transform2d, TransformResult, TransformRow, MODE_SIGMA,
    TRIANGLE_EDGE,
};

use crate::copilot::Copilot;
use crate::demos::episode_seed;
use crate::env::EnvSpec;
use crate::error::{Error, Result};
use crate::pilot::{ExpertGains, PilotSpec};

/// Grid definition for [`sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub pilots: Vec<PilotSpec>,
    pub gammas: Vec<f64>,
    pub episodes_per_seed: usize,
    pub seeds: Vec<u64>,
}

impl SweepPlan {
    /// Episode seeds of one cell, group-major. Every cell uses the same list.
    pub fn episode_seeds(&self) -> Vec<u64> {
        self.seeds
            .iter()
            .flat_map(|&g| (0..self.episodes_per_seed as u64).map(move |e| episode_seed(g, e)))
            .collect()
    }
}

pub fn sweep(env: &EnvSpec, gains: &ExpertGains, plan: &SweepPlan, copilot: Option<&Copilot>) -> Result<SweepReport> {
    sweep_with(env, gains, plan, copilot, |_| {})
}

/// Runs every (pilot, γ) cell and calls `progress` after each one.
pub fn sweep_with(
    env: &EnvSpec,
    gains: &ExpertGains,
    plan: &SweepPlan,
    copilot: Option<&Copilot>,
    mut progress: impl FnMut(&CellStats),
) -> Result<SweepReport> {
    if plan.pilots.is_empty() || plan.gammas.is_empty() || plan.seeds.is_empty() || plan.episodes_per_seed == 0 {
        return Err(Error::Config("sweep needs pilots, gammas, seeds and episodes".into()));
    }
    if copilot.is_none() && plan.gammas.iter().any(|&g| g != 0.0) {
        return Err(Error::Config("a checkpoint is required for gamma > 0".into()));
    }
    let seeds = plan.episode_seeds();
    let mut cells = Vec::new();
    let mut records = Vec::new();
    for pilot in &plan.pilots {
        for &gamma in &plan.gammas {
            let c = copilot.map(|c| c.with_gamma(gamma)).transpose()?;
            let recs = run_batch(env, gains, pilot, c.as_ref(), &seeds)?;
            let cell = CellStats::from_records(pilot.to_string(), gamma, &recs, plan.episodes_per_seed);
            progress(&cell);
            cells.push(cell);
            records.extend(recs);
        }
    }
    Ok(SweepReport {
        env: env.kind(),
        pilots: plan.pilots.iter().map(|p| p.to_string()).collect(),
        gammas: plan.gammas.clone(),
        episodes_per_seed: plan.episodes_per_seed,
        seeds: plan.seeds.clone(),
        cells,
        records,
    })
}

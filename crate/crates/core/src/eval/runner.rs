//! Seeded episode rollouts. Episodes sharing a cell run in lockstep so the
//! copilot sees one batched network evaluation per reverse step.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::copilot::Copilot;
use crate::env::{EnvKind, EnvSpec, EnvState, OutcomeLabel};
use crate::error::{Error, Result};
use crate::pilot::{pilot_action, ExpertGains, PilotSpec, PilotState};
use crate::rng::{rng_from, stream, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub env: EnvKind,
    pub pilot: String,
    /// `None` when no copilot was attached.
    pub gamma: Option<f64>,
    pub seed: u64,
    pub outcome: OutcomeLabel,
    pub length: usize,
    /// Goal index the pilot was steering for (point-mass only).
    pub goal_index: Option<usize>,
    /// First goal the agent came to rest at (point-mass only).
    pub settled_goal: Option<usize>,
    pub mean_displacement: f64,
    pub max_displacement: f64,
}

struct Live {
    slot: usize,
    state: EnvState,
    pilot: PilotState,
    disp_sum: f64,
    disp_max: f64,
}

/// Runs one episode per seed and returns records in seed order.
pub fn run_batch(
    env: &EnvSpec,
    gains: &ExpertGains,
    pilot: &PilotSpec,
    copilot: Option<&Copilot>,
    seeds: &[u64],
) -> Result<Vec<EpisodeRecord>> {
    env.validate()?;
    pilot.validate()?;
    if let Some(c) = copilot {
        if (c.model().state_dim(), c.model().action_dim()) != (env.state_dim(), env.action_dim()) {
            return Err(Error::Config(format!(
                "checkpoint expects state/action dims {}/{}, environment has {}/{}",
                c.model().state_dim(),
                c.model().action_dim(),
                env.state_dim(),
                env.action_dim()
            )));
        }
    }
    let (sd, ad) = (env.state_dim(), env.action_dim());
    let mut live: Vec<Live> = seeds
        .iter()
        .enumerate()
        .map(|(slot, &seed)| Live {
            slot,
            state: env.reset(seed),
            pilot: PilotState::new(rng_from(seed, stream::PILOT)),
            disp_sum: 0.0,
            disp_max: 0.0,
        })
        .collect();
    let mut rngs: Vec<Rng> = seeds.iter().map(|&s| rng_from(s, stream::COPILOT)).collect();
    let mut done: Vec<Option<EpisodeRecord>> = vec![None; seeds.len()];

    while !live.is_empty() {
        let n = live.len();
        let mut states = Array2::zeros((n, sd));
        let mut actions = Array2::zeros((n, ad));
        for (i, ep) in live.iter_mut().enumerate() {
            let a = pilot_action(env, gains, pilot, &mut ep.pilot, &ep.state.observe(true))?;
            let a = env.clamp_action(&a);
            for (j, v) in ep.state.observe(false).into_iter().enumerate() {
                states[[i, j]] = v;
            }
            for (j, v) in a.into_iter().enumerate() {
                actions[[i, j]] = v;
            }
        }
        let shared = match copilot {
            Some(c) => c.assist_batch(states.view(), actions.view(), &mut rngs)?.0,
            None => actions.clone(),
        };
        let mut alive = vec![true; n];
        for (i, ep) in live.iter_mut().enumerate() {
            let a_s = shared.row(i).to_vec();
            let d: f64 = a_s.iter().zip(actions.row(i)).map(|(s, h)| (s - h).powi(2)).sum();
            ep.disp_sum += d;
            ep.disp_max = ep.disp_max.max(d);
            let (next, out) = env.step(&ep.state, &a_s)?;
            ep.state = next;
            if out.label.is_terminal() {
                alive[i] = false;
                done[ep.slot] = Some(record(env, pilot, copilot, seeds[ep.slot], ep));
            }
        }
        if alive.iter().any(|a| !a) {
            let mut keep = alive.iter().copied();
            live.retain(|_| keep.next().unwrap());
            let mut keep = alive.iter().copied();
            rngs.retain(|_| keep.next().unwrap());
        }
    }
    Ok(done.into_iter().map(|r| r.expect("every episode terminates")).collect())
}

fn record(env: &EnvSpec, pilot: &PilotSpec, copilot: Option<&Copilot>, seed: u64, ep: &Live) -> EpisodeRecord {
    let out = ep.state.outcome();
    let (goal_index, settled_goal) = match &ep.state {
        EnvState::PointMass2d(s) => (Some(s.goal_index), s.settled),
        EnvState::SimpleLander(_) => (None, None),
    };
    EpisodeRecord {
        env: env.kind(),
        pilot: pilot.to_string(),
        gamma: copilot.map(Copilot::gamma),
        seed,
        outcome: out.label,
        length: out.step,
        goal_index,
        settled_goal,
        mean_displacement: ep.disp_sum / out.step.max(1) as f64,
        max_displacement: ep.disp_max,
    }
}

pub fn run_episode(
    env: &EnvSpec,
    gains: &ExpertGains,
    pilot: &PilotSpec,
    copilot: Option<&Copilot>,
    seed: u64,
) -> Result<EpisodeRecord> {
    Ok(run_batch(env, gains, pilot, copilot, &[seed])?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pilot::PilotKind;

    #[test]
    fn expert_succeeds_and_zero_floats() {
        let env = EnvSpec::new(EnvKind::PointMass2d);
        let g = ExpertGains::default();
        let r = run_episode(&env, &g, &PilotSpec::expert(), None, 3).unwrap();
        assert_eq!(r.outcome, OutcomeLabel::Success);
        assert_eq!(r.settled_goal, r.goal_index);
        let zero = PilotSpec::new(PilotKind::Zero, 0.0).unwrap();
        let r = run_episode(&env, &g, &zero, None, 3).unwrap();
        assert_eq!(r.outcome, OutcomeLabel::TimeoutFloat);
        assert_eq!(r.length, 300);
        assert_eq!(r.mean_displacement, 0.0);
    }

    #[test]
    fn batch_matches_single_episodes_without_copilot() {
        let env = EnvSpec::new(EnvKind::SimpleLander);
        let g = ExpertGains::default();
        let p: PilotSpec = "noisy:0.5".parse().unwrap();
        let seeds = [5, 6, 7, 8, 9];
        let batch = run_batch(&env, &g, &p, None, &seeds).unwrap();
        for (r, &s) in batch.iter().zip(&seeds) {
            assert_eq!(r, &run_episode(&env, &g, &p, None, s).unwrap());
            assert!(r.outcome.is_terminal());
            assert!(r.length <= env.timeout());
        }
    }
}

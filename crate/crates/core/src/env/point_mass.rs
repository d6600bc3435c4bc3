//! Point mass pushed by a bounded 2D force inside a walled square arena.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Outcome, OutcomeLabel};
use crate::error::{Error, Result};
use crate::rng::{rng_from, stream::ENV};

pub(crate) const STATE_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMassSpec {
    /// Side length; the arena is `[0, arena]²`.
    pub arena: f64,
    pub mass: f64,
    pub damp: f64,
    pub dt: f64,
    pub timeout: usize,
    pub goal_radius: f64,
    /// Speed below which the mass counts as stopped inside a goal region.
    pub settle_speed: f64,
    pub start: [f64; 2],
    /// Resets draw the start uniformly from `start ± start_spread` per axis,
    /// kept inside the arena. Zero gives the fixed start.
    pub start_spread: f64,
    pub goals: Vec<[f64; 2]>,
    /// Forces every reset onto this goal index.
    pub fixed_goal: Option<usize>,
    /// Ends the episode as `wrong_goal` when the mass settles at another goal.
    pub wrong_goal_terminal: bool,
}

impl Default for PointMassSpec {
    fn default() -> Self {
        Self {
            arena: 8.0,
            mass: 2.5,
            damp: 0.98,
            dt: 0.05,
            timeout: 300,
            goal_radius: 0.5,
            settle_speed: 0.065,
            start: [4.0, 4.0],
            start_spread: 0.0,
            goals: vec![[1.5, 1.5], [6.5, 1.5]],
            fixed_goal: None,
            wrong_goal_terminal: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMassState {
    pub pos: [f64; 2],
    pub vel: [f64; 2],
    pub goal: [f64; 2],
    pub goal_index: usize,
    pub t: usize,
    pub outcome: Outcome,
    /// First goal whose region the mass entered.
    pub entered: Option<usize>,
    /// First goal the mass came to rest at.
    pub settled: Option<usize>,
}

impl PointMassSpec {
    pub(crate) fn validate(&self) -> Result<()> {
        let ok = self.arena > 0.0
            && self.mass > 0.0
            && (0.0..=1.0).contains(&self.damp)
            && self.goal_radius > 0.0
            && self.settle_speed >= 0.0
            && self.start_spread >= 0.0
            && !self.goals.is_empty()
            && self.goals.iter().chain([&self.start]).all(|g| g.iter().all(|c| (0.0..=self.arena).contains(c)))
            && self.fixed_goal.is_none_or(|i| i < self.goals.len());
        if ok {
            Ok(())
        } else {
            Err(Error::Config("invalid point-mass constants".into()))
        }
    }

    pub(crate) fn reset(&self, seed: u64) -> PointMassState {
        let mut rng = rng_from(seed, ENV);
        let drawn = rng.random_range(0..self.goals.len());
        let goal_index = self.fixed_goal.unwrap_or(drawn);
        let mut pos = self.start;
        if self.start_spread > 0.0 {
            for p in &mut pos {
                let lo = (*p - self.start_spread).max(0.0);
                let hi = (*p + self.start_spread).min(self.arena);
                *p = rng.random_range(lo..=hi);
            }
        }
        PointMassState {
            pos,
            vel: [0.0; 2],
            goal: self.goals[goal_index],
            goal_index,
            t: 0,
            outcome: Outcome { label: OutcomeLabel::Running, step: 0 },
            entered: None,
            settled: None,
        }
    }

    pub(crate) fn step(&self, s: &PointMassState, force: [f64; 2]) -> PointMassState {
        let mut n = s.clone();
        for i in 0..2 {
            n.vel[i] = self.damp * s.vel[i] + force[i] / self.mass * self.dt;
            n.pos[i] = s.pos[i] + n.vel[i] * self.dt;
            if n.pos[i] < 0.0 || n.pos[i] > self.arena {
                n.pos[i] = n.pos[i].clamp(0.0, self.arena);
                n.vel[i] = 0.0;
            }
        }
        n.t = s.t + 1;

        let speed = n.vel[0].hypot(n.vel[1]);
        let inside = self
            .goals
            .iter()
            .position(|g| (n.pos[0] - g[0]).hypot(n.pos[1] - g[1]) <= self.goal_radius);
        if let Some(i) = inside {
            n.entered.get_or_insert(i);
            if speed <= self.settle_speed {
                n.settled.get_or_insert(i);
                if i == s.goal_index {
                    n.outcome = Outcome { label: OutcomeLabel::Success, step: n.t };
                    return n;
                }
                if self.wrong_goal_terminal {
                    n.outcome = Outcome { label: OutcomeLabel::WrongGoal, step: n.t };
                    return n;
                }
            }
        }
        if n.t >= self.timeout {
            n.outcome = Outcome { label: OutcomeLabel::TimeoutFloat, step: n.t };
        }
        n
    }
}

impl PointMassState {
    pub(crate) fn observe(&self, include_goal: bool) -> Vec<f64> {
        let mut v = vec![self.pos[0], self.pos[1], self.vel[0], self.vel[1]];
        if include_goal {
            v.extend_from_slice(&self.goal);
        }
        v
    }
}

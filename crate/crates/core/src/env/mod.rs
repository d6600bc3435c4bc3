//! Desk-scale control tasks.
//!
//! Both tasks expose two observation views: the pilot's, which has the goal
//! appended, and the copilot's, which is identical with the goal removed.

mod lander;
mod point_mass;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use lander::{LanderSpec, LanderState};
pub use point_mass::{PointMassSpec, PointMassState};

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    #[serde(rename = "point_mass_2d")]
    PointMass2d,
    SimpleLander,
}

impl EnvKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EnvKind::PointMass2d => "point_mass_2d",
            EnvKind::SimpleLander => "simple_lander",
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "point_mass_2d" | "point_mass" | "pointmass" => Ok(EnvKind::PointMass2d),
            "simple_lander" | "lander" => Ok(EnvKind::SimpleLander),
            other => Err(Error::Config(format!("unknown environment kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeLabel {
    Running,
    Success,
    Crash,
    OutOfBounds,
    TimeoutFloat,
    WrongGoal,
}

impl OutcomeLabel {
    pub fn is_terminal(self) -> bool {
        self != OutcomeLabel::Running
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeLabel::Running => "running",
            OutcomeLabel::Success => "success",
            OutcomeLabel::Crash => "crash",
            OutcomeLabel::OutOfBounds => "out_of_bounds",
            OutcomeLabel::TimeoutFloat => "timeout_float",
            OutcomeLabel::WrongGoal => "wrong_goal",
        }
    }
}

impl fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub label: OutcomeLabel,
    /// Number of steps taken when the label was assigned.
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvSpec {
    #[serde(rename = "point_mass_2d")]
    PointMass2d(PointMassSpec),
    SimpleLander(LanderSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvState {
    #[serde(rename = "point_mass_2d")]
    PointMass2d(PointMassState),
    SimpleLander(LanderState),
}

impl EnvSpec {
    pub fn new(kind: EnvKind) -> Self {
        match kind {
            EnvKind::PointMass2d => EnvSpec::PointMass2d(PointMassSpec::default()),
            EnvKind::SimpleLander => EnvSpec::SimpleLander(LanderSpec::default()),
        }
    }

    pub fn kind(&self) -> EnvKind {
        match self {
            EnvSpec::PointMass2d(_) => EnvKind::PointMass2d,
            EnvSpec::SimpleLander(_) => EnvKind::SimpleLander,
        }
    }

    /// Copilot (goal-stripped) observation width.
    pub fn state_dim(&self) -> usize {
        match self {
            EnvSpec::PointMass2d(_) => point_mass::STATE_DIM,
            EnvSpec::SimpleLander(_) => lander::STATE_DIM,
        }
    }

    pub fn goal_dim(&self) -> usize {
        match self {
            EnvSpec::PointMass2d(_) => 2,
            EnvSpec::SimpleLander(_) => 1,
        }
    }

    pub fn action_dim(&self) -> usize {
        2
    }

    /// Per-coordinate `(low, high)` action bounds.
    pub fn action_bounds(&self) -> (f64, f64) {
        (-1.0, 1.0)
    }

    pub fn timeout(&self) -> usize {
        match self {
            EnvSpec::PointMass2d(s) => s.timeout,
            EnvSpec::SimpleLander(s) => s.timeout,
        }
    }

    pub fn dt(&self) -> f64 {
        match self {
            EnvSpec::PointMass2d(s) => s.dt,
            EnvSpec::SimpleLander(s) => s.dt,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.action_bounds();
        if self.timeout() == 0 || !(self.dt() > 0.0) || !(lo < hi) {
            return Err(Error::Config("environment needs timeout > 0, dt > 0 and low < high".into()));
        }
        match self {
            EnvSpec::PointMass2d(s) => s.validate(),
            EnvSpec::SimpleLander(s) => s.validate(),
        }
    }

    pub fn reset(&self, seed: u64) -> EnvState {
        match self {
            EnvSpec::PointMass2d(s) => EnvState::PointMass2d(s.reset(seed)),
            EnvSpec::SimpleLander(s) => EnvState::SimpleLander(s.reset(seed)),
        }
    }

    /// Clamps each coordinate into the action box; non-finite entries become 0.
    pub fn clamp_action(&self, action: &[f64]) -> Vec<f64> {
        let (lo, hi) = self.action_bounds();
        action.iter().map(|&a| if a.is_finite() { a.clamp(lo, hi) } else { 0.0 }).collect()
    }

    pub fn step(&self, state: &EnvState, action: &[f64]) -> Result<(EnvState, Outcome)> {
        check_dim(self.action_dim(), action.len())?;
        if state.outcome().label.is_terminal() {
            return Err(Error::Contract("cannot step a terminated episode".into()));
        }
        let a = self.clamp_action(action);
        match (self, state) {
            (EnvSpec::PointMass2d(spec), EnvState::PointMass2d(s)) => {
                let next = spec.step(s, [a[0], a[1]]);
                let out = next.outcome;
                Ok((EnvState::PointMass2d(next), out))
            }
            (EnvSpec::SimpleLander(spec), EnvState::SimpleLander(s)) => {
                let next = spec.step(s, [a[0], a[1]]);
                let out = next.outcome;
                Ok((EnvState::SimpleLander(next), out))
            }
            _ => Err(Error::Contract("state does not belong to this environment".into())),
        }
    }
}

impl EnvState {
    pub fn outcome(&self) -> Outcome {
        match self {
            EnvState::PointMass2d(s) => s.outcome,
            EnvState::SimpleLander(s) => s.outcome,
        }
    }

    pub fn steps_taken(&self) -> usize {
        match self {
            EnvState::PointMass2d(s) => s.t,
            EnvState::SimpleLander(s) => s.t,
        }
    }

    /// Observation vector. Layouts:
    /// * point-mass: `[px, py, vx, vy]` then `[gx, gy]`
    /// * lander: `[x, y, angle, vx, vy, omega, left_leg, right_leg]` then `[pad_x]`
    pub fn observe(&self, include_goal: bool) -> Vec<f64> {
        match self {
            EnvState::PointMass2d(s) => s.observe(include_goal),
            EnvState::SimpleLander(s) => s.observe(include_goal),
        }
    }

    /// Goal coordinates alone.
    pub fn goal(&self) -> Vec<f64> {
        match self {
            EnvState::PointMass2d(s) => s.goal.to_vec(),
            EnvState::SimpleLander(s) => vec![s.pad_x],
        }
    }
}

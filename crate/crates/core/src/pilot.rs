//! Scripted experts and the surrogate pilots built from them.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::env::EnvSpec;
use crate::error::{check_dim, Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertGains {
    pub pm_kp: f64,
    pub pm_kd: f64,
    /// Horizontal speed commanded per unit of pad offset.
    pub ld_kx: f64,
    pub ld_vx_max: f64,
    /// Attitude commanded per unit of horizontal speed error.
    pub ld_k_tilt: f64,
    pub ld_tilt_max: f64,
    pub ld_k_theta: f64,
    pub ld_k_omega: f64,
    pub ld_k_vy: f64,
    /// Lateral offset under which the craft descends instead of cruising.
    pub ld_align: f64,
    pub ld_cruise_height: f64,
    pub ld_descent_k: f64,
    pub ld_descent_b: f64,
    pub ld_descent_min: f64,
}

impl Default for ExpertGains {
    fn default() -> Self {
        Self {
            pm_kp: 32.0,
            pm_kd: 1.0,
            ld_kx: 0.5,
            ld_vx_max: 1.5,
            ld_k_tilt: 0.6,
            ld_tilt_max: 0.4,
            ld_k_theta: 12.0,
            ld_k_omega: 2.0,
            ld_k_vy: 8.0,
            ld_align: 0.6,
            ld_cruise_height: 4.0,
            ld_descent_k: 0.3,
            ld_descent_b: 0.15,
            ld_descent_min: 0.4,
        }
    }
}

/// Deterministic goal-aware controller. `obs` must include the goal.
pub fn expert_action(env: &EnvSpec, gains: &ExpertGains, obs: &[f64]) -> Result<Vec<f64>> {
    check_dim(env.state_dim() + env.goal_dim(), obs.len())?;
    let a = match env {
        EnvSpec::PointMass2d(_) => {
            let f = |i: usize| gains.pm_kp * (obs[4 + i] - obs[i]) - gains.pm_kd * obs[2 + i];
            vec![f(0), f(1)]
        }
        EnvSpec::SimpleLander(spec) => {
            let g = gains;
            let (x, y, th, vx, vy, om) = (obs[0], obs[1], obs[2], obs[3], obs[4], obs[5]);
            let dx = obs[8] - x;
            let vx_target = (g.ld_kx * dx).clamp(-g.ld_vx_max, g.ld_vx_max);
            let th_target = (-g.ld_k_tilt * (vx_target - vx)).clamp(-g.ld_tilt_max, g.ld_tilt_max);
            let side = g.ld_k_theta * (th_target - th) - g.ld_k_omega * om;
            let h = y - spec.leg_dy;
            let vy_target = if dx.abs() > g.ld_align {
                (0.8 * (g.ld_cruise_height - h)).clamp(-1.5, 1.0)
            } else {
                -(g.ld_descent_k * h + g.ld_descent_b).clamp(g.ld_descent_min, 1.5)
            };
            let throttle = (spec.gravity + g.ld_k_vy * (vy_target - vy)) / (spec.main_accel * th.cos().max(0.3));
            vec![throttle.clamp(0.0, 1.0), side]
        }
    };
    Ok(env.clamp_action(&a))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PilotKind {
    Expert,
    Noisy,
    Laggy,
    Zero,
    Random,
}

impl PilotKind {
    pub const ALL: [PilotKind; 5] =
        [PilotKind::Expert, PilotKind::Noisy, PilotKind::Laggy, PilotKind::Zero, PilotKind::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            PilotKind::Expert => "expert",
            PilotKind::Noisy => "noisy",
            PilotKind::Laggy => "laggy",
            PilotKind::Zero => "zero",
            PilotKind::Random => "random",
        }
    }
}

/// A pilot kind plus its corruption probability. Parses from `"noisy:0.6"`,
/// `"laggy:0.85"`, `"expert"`, `"zero"`, `"random"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PilotSpec {
    pub kind: PilotKind,
    pub p: f64,
}

impl PilotSpec {
    pub fn new(kind: PilotKind, p: f64) -> Result<Self> {
        let spec = Self { kind, p };
        spec.validate()?;
        Ok(spec)
    }

    pub fn expert() -> Self {
        Self { kind: PilotKind::Expert, p: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Config(format!("pilot probability {} outside [0, 1]", self.p)));
        }
        Ok(())
    }

    /// Whether the pilot's output depends on the goal at all.
    pub fn knows_goal(&self) -> bool {
        !matches!(self.kind, PilotKind::Zero | PilotKind::Random)
    }
}

impl fmt::Display for PilotSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PilotKind::Noisy | PilotKind::Laggy => write!(f, "{}:{}", self.kind.as_str(), self.p),
            k => f.write_str(k.as_str()),
        }
    }
}

impl FromStr for PilotSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, p) = match s.trim().split_once(':') {
            Some((n, p)) => {
                let p = p.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad pilot probability in '{s}'")))?;
                (n.trim(), Some(p))
            }
            None => (s.trim(), None),
        };
        let kind = match name.to_ascii_lowercase().as_str() {
            "expert" => PilotKind::Expert,
            "noisy" => PilotKind::Noisy,
            "laggy" => PilotKind::Laggy,
            "zero" => PilotKind::Zero,
            "random" => PilotKind::Random,
            other => return Err(Error::Config(format!("unknown pilot kind '{other}'"))),
        };
        let p = match (kind, p) {
            (PilotKind::Noisy | PilotKind::Laggy, Some(p)) => p,
            (PilotKind::Noisy | PilotKind::Laggy, None) => {
                return Err(Error::Config(format!("pilot '{name}' needs a probability, e.g. {name}:0.5")))
            }
            (_, Some(_)) => return Err(Error::Config(format!("pilot '{name}' takes no probability"))),
            (_, None) => 0.0,
        };
        PilotSpec::new(kind, p)
    }
}

/// Per-episode pilot memory and randomness.
#[derive(Debug, Clone)]
pub struct PilotState {
    pub prev: Option<Vec<f64>>,
    pub rng: Rng,
}

impl PilotState {
    pub fn new(rng: Rng) -> Self {
        Self { prev: None, rng }
    }
}

fn uniform_action(env: &EnvSpec, rng: &mut Rng) -> Vec<f64> {
    let (lo, hi) = env.action_bounds();
    (0..env.action_dim()).map(|_| rng.random_range(lo..=hi)).collect()
}

/// One pilot decision. Every kind draws the same number of random values per
/// step so that pilots sharing a seed also share their random stream phase.
pub fn pilot_action(
    env: &EnvSpec,
    gains: &ExpertGains,
    spec: &PilotSpec,
    state: &mut PilotState,
    obs: &[f64],
) -> Result<Vec<f64>> {
    let coin = state.rng.random::<f64>();
    let uniform = uniform_action(env, &mut state.rng);
    let action = match spec.kind {
        PilotKind::Zero => {
            check_dim(env.state_dim() + env.goal_dim(), obs.len())?;
            vec![0.0; env.action_dim()]
        }
        PilotKind::Random => {
            check_dim(env.state_dim() + env.goal_dim(), obs.len())?;
            uniform
        }
        PilotKind::Expert => expert_action(env, gains, obs)?,
        PilotKind::Noisy => {
            let e = expert_action(env, gains, obs)?;
            if coin < spec.p {
                uniform
            } else {
                e
            }
        }
        PilotKind::Laggy => {
            let e = expert_action(env, gains, obs)?;
            let prev = state.prev.get_or_insert_with(|| e.clone());
            if coin < spec.p {
                prev.clone()
            } else {
                e
            }
        }
    };
    state.prev = Some(action.clone());
    Ok(action)
}

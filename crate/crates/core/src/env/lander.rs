//! Rigid 2D lander: main engine along the body axis, side thrusters that push
//! laterally and spin the craft, flat ground at `y = 0`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Outcome, OutcomeLabel};
use crate::error::{Error, Result};
use crate::rng::{rng_from, stream::ENV};

pub(crate) const STATE_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanderSpec {
    pub dt: f64,
    pub timeout: usize,
    pub gravity: f64,
    /// Acceleration at full main throttle. Negative throttle is engine-off.
    pub main_accel: f64,
    /// Lateral acceleration at full side thrust.
    pub side_accel: f64,
    /// Angular acceleration at full side thrust.
    pub torque_accel: f64,
    /// Arena is `|x| <= half_width`, `y <= ceiling`.
    pub half_width: f64,
    pub ceiling: f64,
    /// Leg tips sit at `(±leg_dx, -leg_dy)` in the body frame.
    pub leg_dx: f64,
    pub leg_dy: f64,
    pub v_land: f64,
    pub theta_land: f64,
    pub pad_half_width: f64,
    /// Pad centers are drawn from `U(-pad_range, pad_range)`.
    pub pad_range: f64,
    pub start_height: f64,
}

impl Default for LanderSpec {
    fn default() -> Self {
        Self {
            dt: 0.02,
            timeout: 1000,
            gravity: 1.6,
            main_accel: 4.0,
            side_accel: 0.4,
            torque_accel: 6.0,
            half_width: 10.0,
            ceiling: 16.0,
            leg_dx: 0.5,
            leg_dy: 0.5,
            v_land: 0.5,
            theta_land: 0.3,
            pad_half_width: 1.0,
            pad_range: 6.0,
            start_height: 12.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanderState {
    pub pos: [f64; 2],
    pub angle: f64,
    pub vel: [f64; 2],
    pub omega: f64,
    pub legs: [bool; 2],
    pub pad_x: f64,
    pub t: usize,
    pub outcome: Outcome,
}

impl LanderSpec {
    pub(crate) fn validate(&self) -> Result<()> {
        let pos = [
            self.gravity,
            self.main_accel,
            self.half_width,
            self.ceiling,
            self.leg_dy,
            self.v_land,
            self.theta_land,
            self.pad_half_width,
        ];
        let ok = pos.iter().all(|&v| v > 0.0)
            && self.main_accel > self.gravity
            && self.pad_range + self.pad_half_width <= self.half_width
            && self.start_height < self.ceiling;
        if ok {
            Ok(())
        } else {
            Err(Error::Config("invalid lander constants".into()))
        }
    }

    pub(crate) fn reset(&self, seed: u64) -> LanderState {
        let mut rng = rng_from(seed, ENV);
        let pad_x = rng.random_range(-self.pad_range..=self.pad_range);
        LanderState {
            pos: [rng.random_range(-0.5..0.5), self.start_height + rng.random_range(-0.5..0.5)],
            angle: rng.random_range(-0.1..0.1),
            vel: [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.0)],
            omega: 0.0,
            legs: [false; 2],
            pad_x,
            t: 0,
            outcome: Outcome { label: OutcomeLabel::Running, step: 0 },
        }
    }

    /// Heights of the two leg tips above ground.
    pub fn leg_heights(&self, s: &LanderState) -> [f64; 2] {
        let (sin, cos) = s.angle.sin_cos();
        [-self.leg_dx, self.leg_dx].map(|dx| s.pos[1] + dx * sin - self.leg_dy * cos)
    }

    pub(crate) fn step(&self, s: &LanderState, action: [f64; 2]) -> LanderState {
        let throttle = action[0].max(0.0) * self.main_accel;
        let lateral = action[1];
        let (sin, cos) = s.angle.sin_cos();
        let ax = -sin * throttle + self.side_accel * lateral * cos;
        let ay = cos * throttle + self.side_accel * lateral * sin - self.gravity;

        let mut n = s.clone();
        n.omega = s.omega + self.torque_accel * lateral * self.dt;
        n.vel = [s.vel[0] + ax * self.dt, s.vel[1] + ay * self.dt];
        n.pos = [s.pos[0] + n.vel[0] * self.dt, s.pos[1] + n.vel[1] * self.dt];
        n.angle = s.angle + n.omega * self.dt;
        n.t = s.t + 1;

        let tips = self.leg_heights(&n);
        if tips.iter().any(|&h| h <= 0.0) {
            let speed = n.vel[0].hypot(n.vel[1]);
            let soft = (n.pos[0] - n.pad_x).abs() <= self.pad_half_width
                && speed <= self.v_land
                && n.angle.abs() <= self.theta_land;
            // A soft touchdown rocks onto the second leg; a hard one leaves
            // only the legs that actually hit.
            n.legs = if soft { [true; 2] } else { tips.map(|h| h <= 0.0) };
            let label = if soft { OutcomeLabel::Success } else { OutcomeLabel::Crash };
            n.outcome = Outcome { label, step: n.t };
        } else if n.pos[0].abs() > self.half_width || n.pos[1] > self.ceiling {
            n.outcome = Outcome { label: OutcomeLabel::OutOfBounds, step: n.t };
        } else if n.t >= self.timeout {
            n.outcome = Outcome { label: OutcomeLabel::TimeoutFloat, step: n.t };
        }
        n
    }
}

impl LanderState {
    pub(crate) fn observe(&self, include_goal: bool) -> Vec<f64> {
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        let mut v = vec![
            self.pos[0],
            self.pos[1],
            self.angle,
            self.vel[0],
            self.vel[1],
            self.omega,
            flag(self.legs[0]),
            flag(self.legs[1]),
        ];
        if include_goal {
            v.push(self.pad_x);
        }
        v
    }
}

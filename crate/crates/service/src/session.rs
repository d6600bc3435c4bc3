//! Per-connection session logic, independent of any transport.
//!
//! The transport calls [`Session::handle`] for each decoded client message
//! and [`Session::tick`] once per tick period.

use std::sync::Arc;

use difcopilot_core::pilot::pilot_action;
use difcopilot_core::rng::{rng_from, stream, Rng};
use difcopilot_core::{Copilot, CopilotConfig, DiffusionModel, EnvSpec, EnvState, ExpertGains, PilotSpec, PilotState};

use crate::protocol::{ClientMessage, ServerMessage};

/// Who produces the pilot action each tick.
#[derive(Debug, Clone, PartialEq)]
pub enum PilotMode {
    Human,
    Surrogate(PilotSpec),
}

impl PilotMode {
    pub fn parse(text: &str) -> Result<Self, String> {
        match text.trim() {
            "human" => Ok(PilotMode::Human),
            other => match other.strip_prefix("surrogate:") {
                Some(spec) => spec.parse().map(PilotMode::Surrogate).map_err(|e| e.to_string()),
                None => Err(format!("unknown pilot mode '{other}'")),
            },
        }
    }

    pub fn label(&self) -> String {
        match self {
            PilotMode::Human => "human".into(),
            PilotMode::Surrogate(p) => format!("surrogate:{p}"),
        }
    }
}

/// Read-only state shared by every session of a server.
#[derive(Debug, Clone)]
pub struct SessionSetup {
    pub env: EnvSpec,
    pub model: Arc<DiffusionModel>,
    pub copilot: CopilotConfig,
    pub gains: ExpertGains,
    pub tick_hz: f64,
}

pub struct Session {
    setup: Arc<SessionSetup>,
    copilot: Copilot,
    pending_gamma: Option<f64>,
    state: EnvState,
    seed: u64,
    held: Vec<f64>,
    mode: PilotMode,
    pilot: PilotState,
    rng: Rng,
    tick: u64,
    finished: bool,
}

impl Session {
    pub fn new(setup: Arc<SessionSetup>, seed: u64) -> Result<Self, String> {
        let m = &setup.model;
        if (m.state_dim(), m.action_dim()) != (setup.env.state_dim(), setup.env.action_dim()) {
            return Err(format!("checkpoint dimensions do not fit environment {}", setup.env.kind()));
        }
        let copilot = Copilot::new(setup.model.clone(), setup.copilot).map_err(|e| e.to_string())?;
        let state = setup.env.reset(seed);
        Ok(Self {
            held: vec![0.0; setup.env.action_dim()],
            pilot: PilotState::new(rng_from(seed, stream::PILOT)),
            rng: rng_from(seed, stream::COPILOT),
            setup,
            copilot,
            pending_gamma: None,
            state,
            seed,
            mode: PilotMode::Human,
            tick: 0,
            finished: false,
        })
    }

    pub fn tick_index(&self) -> u64 {
        self.tick
    }

    pub fn gamma(&self) -> f64 {
        self.copilot.gamma()
    }

    pub fn env_state(&self) -> &EnvState {
        &self.state
    }

    /// The only observation the copilot is ever given.
    pub fn copilot_view(&self) -> Vec<f64> {
        self.state.observe(false)
    }

    fn config_message(&self) -> ServerMessage {
        ServerMessage::Config {
            env: self.setup.env.kind(),
            gamma: self.pending_gamma.unwrap_or(self.copilot.gamma()),
            mode: self.mode.label(),
            seed: self.seed,
            action_dim: self.setup.env.action_dim(),
            tick_hz: self.setup.tick_hz,
        }
    }

    fn state_message(&self, pilot: Vec<f64>, shared: Vec<f64>) -> ServerMessage {
        let displacement = pilot.iter().zip(&shared).map(|(a, b)| (a - b).powi(2)).sum();
        ServerMessage::State {
            tick: self.tick,
            state: self.state.clone(),
            pilot_action: pilot,
            shared_action: shared,
            displacement,
            gamma: self.copilot.gamma(),
        }
    }

    /// Frames sent right after connecting.
    pub fn greeting(&self) -> Vec<ServerMessage> {
        let zero = vec![0.0; self.setup.env.action_dim()];
        vec![self.config_message(), self.state_message(zero.clone(), zero)]
    }

    pub fn handle(&mut self, msg: ClientMessage) -> Vec<ServerMessage> {
        match msg {
            ClientMessage::Input { action } => {
                if action.len() != self.setup.env.action_dim() || action.iter().any(|a| !a.is_finite()) {
                    return vec![ServerMessage::error(format!(
                        "input needs {} finite components",
                        self.setup.env.action_dim()
                    ))];
                }
                self.held = self.setup.env.clamp_action(&action);
                vec![]
            }
            ClientMessage::SetGamma { gamma } => {
                if !(0.0..=1.0).contains(&gamma) {
                    return vec![ServerMessage::error(format!("gamma {gamma} outside [0, 1]"))];
                }
                self.pending_gamma = Some(gamma);
                vec![self.config_message()]
            }
            ClientMessage::Reset { env, seed } => {
                if let Some(kind) = env {
                    if kind != self.setup.env.kind() {
                        return vec![ServerMessage::error(format!(
                            "this server runs {}, not {kind}",
                            self.setup.env.kind()
                        ))];
                    }
                }
                self.seed = seed;
                self.state = self.setup.env.reset(seed);
                self.pilot = PilotState::new(rng_from(seed, stream::PILOT));
                self.rng = rng_from(seed, stream::COPILOT);
                self.held = vec![0.0; self.setup.env.action_dim()];
                self.finished = false;
                let mut out = vec![self.config_message()];
                let zero = vec![0.0; self.setup.env.action_dim()];
                out.push(self.state_message(zero.clone(), zero));
                out
            }
            ClientMessage::SetPilotMode { mode } => match PilotMode::parse(&mode) {
                Ok(m) => {
                    self.mode = m;
                    vec![self.config_message()]
                }
                Err(e) => vec![ServerMessage::error(e)],
            },
        }
    }

    /// Advances one tick: at most one environment step.
    pub fn tick(&mut self) -> Vec<ServerMessage> {
        self.tick += 1;
        if let Some(g) = self.pending_gamma.take() {
            match self.copilot.with_gamma(g) {
                Ok(c) => self.copilot = c,
                Err(e) => return vec![ServerMessage::error(e)],
            }
        }
        if self.finished {
            return vec![];
        }
        let env = &self.setup.env;
        let a_h = match &self.mode {
            PilotMode::Human => self.held.clone(),
            PilotMode::Surrogate(spec) => {
                match pilot_action(env, &self.setup.gains, spec, &mut self.pilot, &self.state.observe(true)) {
                    Ok(a) => env.clamp_action(&a),
                    Err(e) => return vec![ServerMessage::error(e)],
                }
            }
        };
        let a_s = match self.copilot.assist(&self.copilot_view(), &a_h, &mut self.rng) {
            Ok(a) => a,
            Err(e) => return vec![ServerMessage::error(e)],
        };
        let out = match env.step(&self.state, &a_s) {
            Ok((next, out)) => {
                self.state = next;
                out
            }
            Err(e) => return vec![ServerMessage::error(e)],
        };
        let mut msgs = vec![self.state_message(a_h, a_s)];
        if out.label.is_terminal() {
            self.finished = true;
            msgs.push(ServerMessage::Outcome { tick: self.tick, outcome: out.label, steps: out.step });
        }
        msgs
    }
}

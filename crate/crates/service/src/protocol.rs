//! JSON text frames exchanged on `/session`.
//!
//! Every frame is an object with `"v": 1` and a `"kind"` discriminator.

use difcopilot_core::{EnvKind, EnvState, OutcomeLabel};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const PROTOCOL_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClientMessage {
    Input { action: Vec<f64> },
    SetGamma { gamma: f64 },
    Reset {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        env: Option<EnvKind>,
        seed: u64,
    },
    /// `"human"` or `"surrogate:<pilot>"`, e.g. `"surrogate:noisy:0.3"`.
    SetPilotMode { mode: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ServerMessage {
    State {
        tick: u64,
        state: EnvState,
        pilot_action: Vec<f64>,
        shared_action: Vec<f64>,
        /// Squared distance between the two actions.
        displacement: f64,
        gamma: f64,
    },
    Outcome {
        tick: u64,
        outcome: OutcomeLabel,
        /// Environment steps taken in the finished episode.
        steps: usize,
    },
    Config {
        env: EnvKind,
        gamma: f64,
        mode: String,
        seed: u64,
        action_dim: usize,
        tick_hz: f64,
    },
    Error { message: String },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("missing version field")]
    MissingVersion,
    #[error("protocol version {0} is not supported (expected {PROTOCOL_VERSION})")]
    VersionMismatch(u64),
    #[error("unknown kind '{0}'")]
    UnknownKind(String),
}

impl ProtocolError {
    /// Whether the connection must be closed rather than answered.
    pub fn is_fatal(&self) -> bool {
        matches!(self, ProtocolError::VersionMismatch(_))
    }
}

const CLIENT_KINDS: [&str; 4] = ["input", "set_gamma", "reset", "set_pilot_mode"];
const SERVER_KINDS: [&str; 4] = ["state", "outcome", "config", "error"];

fn encode<T: Serialize>(msg: &T) -> String {
    let mut v = serde_json::to_value(msg).expect("messages serialize");
    v.as_object_mut().expect("tagged enum is an object").insert("v".into(), PROTOCOL_VERSION.into());
    v.to_string()
}

fn decode<T: for<'de> Deserialize<'de>>(text: &str, kinds: &[&str]) -> Result<T, ProtocolError> {
    let mut v: Value = serde_json::from_str(text).map_err(|e| ProtocolError::Malformed(e.to_string()))?;
    let obj = v.as_object_mut().ok_or_else(|| ProtocolError::Malformed("frame is not an object".into()))?;
    match obj.remove("v") {
        None => return Err(ProtocolError::MissingVersion),
        Some(Value::Number(n)) if n.as_u64() == Some(PROTOCOL_VERSION) => {}
        Some(Value::Number(n)) => return Err(ProtocolError::VersionMismatch(n.as_u64().unwrap_or(0))),
        Some(other) => return Err(ProtocolError::Malformed(format!("version must be a number, got {other}"))),
    }
    let kind = obj.get("kind").and_then(Value::as_str).ok_or_else(|| ProtocolError::Malformed("missing kind".into()))?;
    if !kinds.contains(&kind) {
        return Err(ProtocolError::UnknownKind(kind.to_string()));
    }
    serde_json::from_value(v).map_err(|e| ProtocolError::Malformed(e.to_string()))
}

impl ClientMessage {
    pub fn encode(&self) -> String {
        encode(self)
    }

    pub fn decode(text: &str) -> Result<Self, ProtocolError> {
        decode(text, &CLIENT_KINDS)
    }
}

impl ServerMessage {
    pub fn encode(&self) -> String {
        encode(self)
    }

    pub fn decode(text: &str) -> Result<Self, ProtocolError> {
        decode(text, &SERVER_KINDS)
    }

    pub fn error(e: impl std::fmt::Display) -> Self {
        ServerMessage::Error { message: e.to_string() }
    }
}

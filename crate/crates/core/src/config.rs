//! Flat `key = value` configuration files.
//!
//! Keys are dotted paths into [`Config`], e.g. `train.batch = 128`,
//! `lander.v_land = 0.6`, `copilot.gamma = 0.2`. A bare key is looked up in
//! `train`, then `train.adam`, then `copilot`, then `collect`, so `lr = 3e-4` and
//! `total_steps = 1000` work without a prefix. `#` starts a comment.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::copilot::CopilotConfig;
use crate::demos::{DEFAULT_EXEC_NOISE, DEFAULT_NOISE_PER_EPISODE, DEFAULT_START_SPREAD};
use crate::env::{EnvKind, EnvSpec, LanderSpec, PointMassSpec};
use crate::error::{Error, Result};
use crate::pilot::ExpertGains;
use crate::train::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectSettings {
    pub exec_noise: f64,
    pub noise_per_episode: bool,
    pub start_spread: f64,
    pub filter_success: bool,
}

impl Default for CollectSettings {
    fn default() -> Self {
        Self {
            exec_noise: DEFAULT_EXEC_NOISE,
            noise_per_episode: DEFAULT_NOISE_PER_EPISODE,
            start_spread: DEFAULT_START_SPREAD,
            filter_success: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Config {
    pub train: TrainConfig,
    pub copilot: CopilotConfig,
    pub collect: CollectSettings,
    pub point_mass: PointMassSpec,
    pub lander: LanderSpec,
    pub expert: ExpertGains,
}

const BARE_SECTIONS: [&str; 4] = ["train", "train.adam", "copilot", "collect"];

impl Config {
    pub fn env(&self, kind: EnvKind) -> EnvSpec {
        match kind {
            EnvKind::PointMass2d => EnvSpec::PointMass2d(self.point_mass.clone()),
            EnvKind::SimpleLander => EnvSpec::SimpleLander(self.lander.clone()),
        }
    }

    /// Defaults with the training budget for `kind`.
    pub fn for_env(kind: EnvKind) -> Self {
        Self { train: TrainConfig::for_env(kind), ..Self::default() }
    }

    /// Applies `text` on top of `self`.
    pub fn apply(&self, text: &str) -> Result<Self> {
        let mut tree = serde_json::to_value(self).map_err(|e| Error::Config(e.to_string()))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let path = resolve(&tree, key).ok_or_else(|| Error::Config(format!("line {}: unknown key '{key}'", lineno + 1)))?;
            let slot = lookup_mut(&mut tree, &path).expect("resolved path exists");
            *slot = parse_value(value, slot).map_err(|e| Error::Config(format!("line {}: {key}: {e}", lineno + 1)))?;
        }
        let cfg: Config = serde_json::from_value(tree).map_err(|e| Error::Config(e.to_string()))?;
        cfg.train.validate()?;
        if !(0.0..=1.0).contains(&cfg.copilot.gamma) {
            return Err(Error::Config(format!("copilot.gamma {} outside [0, 1]", cfg.copilot.gamma)));
        }
        cfg.env(EnvKind::PointMass2d).validate()?;
        cfg.env(EnvKind::SimpleLander).validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::default().apply(text)
    }

    /// Every settable key with its current value, one `key = value` per line.
    pub fn to_text(&self) -> String {
        let tree = serde_json::to_value(self).expect("config serializes");
        let mut out = String::new();
        flatten("", &tree, &mut out);
        out
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(m) => {
            for (k, child) in m {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&p, child, out);
            }
        }
        other => out.push_str(&format!("{prefix} = {other}\n")),
    }
}

fn lookup<'a>(tree: &'a Value, path: &[&str]) -> Option<&'a Value> {
    path.iter().try_fold(tree, |node, k| node.as_object()?.get(*k))
}

fn lookup_mut<'a>(tree: &'a mut Value, path: &[String]) -> Option<&'a mut Value> {
    path.iter().try_fold(tree, |node, k| node.as_object_mut()?.get_mut(k))
}

fn resolve(tree: &Value, key: &str) -> Option<Vec<String>> {
    let leaf = |p: Vec<&str>| lookup(tree, &p).filter(|v| !v.is_object()).map(|_| p.iter().map(|s| s.to_string()).collect());
    let direct: Vec<&str> = key.split('.').collect();
    if let Some(p) = leaf(direct) {
        return Some(p);
    }
    if key.contains('.') {
        return None;
    }
    BARE_SECTIONS.iter().find_map(|sec| {
        let mut p: Vec<&str> = sec.split('.').collect();
        p.push(key);
        leaf(p)
    })
}

fn parse_value(text: &str, current: &Value) -> std::result::Result<Value, String> {
    let parsed: Option<Value> = serde_json::from_str(text).ok();
    match (current, parsed) {
        (Value::String(_), Some(v @ Value::String(_))) => Ok(v),
        (Value::String(_), _) => Ok(Value::String(text.to_string())),
        (Value::Null, None) => Ok(Value::String(text.to_string())),
        (_, Some(v)) => Ok(v),
        (_, None) => Err(format!("cannot parse '{text}'")),
    }
}

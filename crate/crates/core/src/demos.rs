//! Demonstration collection and the dataset file format.
//!
//! ```text
//! magic   8 bytes  "DIFDEMO1"
//! version u32 LE   = 1
//! hdrlen  u32 LE   length of the JSON header
//! header  UTF-8 JSON (DatasetHeader)
//! rows    f64 LE   count rows of (s || a), row-major
//! ```

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::CollectSettings;
use crate::env::{EnvKind, EnvSpec, OutcomeLabel, PointMassSpec};
use crate::error::{Error, Result};
use crate::pilot::{pilot_action, ExpertGains, PilotSpec, PilotState};
use crate::rng::{derive_seed, rng_from, stream};

pub const DATASET_MAGIC: &[u8; 8] = b"DIFDEMO1";
const VERSION: u32 = 1;
/// Standard deviations below this are replaced by 1 when normalizing.
const STD_FLOOR: f64 = 1e-6;

/// Seed of episode `index` under a run seed. Shared by collection and evaluation.
pub fn episode_seed(seed: u64, index: u64) -> u64 {
    derive_seed(derive_seed(seed, stream::EPISODE), index)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeSpan {
    pub id: u64,
    pub seed: u64,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    /// `None` for synthetic data.
    pub env: Option<EnvKind>,
    pub state_dim: usize,
    pub action_dim: usize,
    pub count: usize,
    pub seed: u64,
    pub pilot: String,
    pub filter_success: bool,
    pub exec_noise: f64,
    #[serde(default)]
    pub noise_per_episode: bool,
    #[serde(default)]
    pub start_spread: f64,
    pub episodes_run: usize,
    /// Retained episodes in storage order; their lengths sum to `count`.
    pub episodes: Vec<EpisodeSpan>,
    pub obs_mean: Vec<f64>,
    pub obs_std: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition<'a> {
    pub s: &'a [f64],
    pub a: &'a [f64],
    pub episode: u64,
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    /// `count × (state_dim + action_dim)` row-major.
    pub rows: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.header.count
    }

    pub fn is_empty(&self) -> bool {
        self.header.count == 0
    }

    pub fn row_width(&self) -> usize {
        self.header.state_dim + self.header.action_dim
    }

    pub fn state(&self, i: usize) -> &[f64] {
        let w = self.row_width();
        &self.rows[i * w..i * w + self.header.state_dim]
    }

    pub fn action(&self, i: usize) -> &[f64] {
        let w = self.row_width();
        &self.rows[i * w + self.header.state_dim..(i + 1) * w]
    }

    pub fn transitions(&self) -> impl Iterator<Item = Transition<'_>> + '_ {
        let mut row = 0;
        self.header.episodes.iter().flat_map(move |ep| {
            let start = row;
            row += ep.len;
            (0..ep.len).map(move |t| Transition {
                s: self.state(start + t),
                a: self.action(start + t),
                episode: ep.id,
                step: t,
            })
        })
    }

    /// Builds a dataset with no episode structure, e.g. synthetic samples.
    pub fn from_samples(env: Option<EnvKind>, state_dim: usize, action_dim: usize, rows: Vec<f64>, seed: u64) -> Result<Self> {
        let w = state_dim + action_dim;
        if w == 0 || rows.len() % w != 0 {
            return Err(Error::Format("sample buffer is not a whole number of rows".into()));
        }
        let count = rows.len() / w;
        let (obs_mean, obs_std) = column_stats(&rows, w, state_dim);
        let header = DatasetHeader {
            env,
            state_dim,
            action_dim,
            count,
            seed,
            pilot: "synthetic".into(),
            filter_success: false,
            exec_noise: 0.0,
            noise_per_episode: false,
            start_spread: 0.0,
            episodes_run: 0,
            episodes: vec![EpisodeSpan { id: 0, seed, len: count }],
            obs_mean,
            obs_std,
        };
        Ok(Self { header, rows })
    }
}

fn column_stats(rows: &[f64], width: usize, cols: usize) -> (Vec<f64>, Vec<f64>) {
    let n = (rows.len() / width.max(1)) as f64;
    let mut mean = vec![0.0; cols];
    let mut var = vec![0.0; cols];
    if n == 0.0 {
        return (mean, vec![1.0; cols]);
    }
    for r in rows.chunks_exact(width) {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / n;
        }
    }
    for r in rows.chunks_exact(width) {
        for ((acc, m), v) in var.iter_mut().zip(&mean).zip(r) {
            *acc += (v - m) * (v - m) / n;
        }
    }
    let std = var.into_iter().map(|v| if v.sqrt() < STD_FLOOR { 1.0 } else { v.sqrt() }).collect();
    (mean, std)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollectConfig {
    pub n_episodes: usize,
    pub seed: u64,
    pub filter_success: bool,
    /// Std of Gaussian noise added to the executed action. The stored label
    /// is the pilot's clean action, so the data covers states around the
    /// nominal trajectory while keeping expert labels.
    pub exec_noise: f64,
    /// Scale each episode's noise by its own `U(0, 1)` draw, so the data mixes
    /// near-nominal and widely perturbed episodes.
    pub noise_per_episode: bool,
    /// Point-mass starts are spread uniformly this far around the nominal
    /// start during collection. Evaluation always uses the nominal start.
    pub start_spread: f64,
}

impl CollectConfig {
    pub fn new(n_episodes: usize, seed: u64) -> Self {
        Self {
            n_episodes,
            seed,
            filter_success: true,
            exec_noise: DEFAULT_EXEC_NOISE,
            noise_per_episode: DEFAULT_NOISE_PER_EPISODE,
            start_spread: DEFAULT_START_SPREAD,
        }
    }

    pub fn from_settings(n_episodes: usize, seed: u64, s: &CollectSettings) -> Self {
        Self {
            n_episodes,
            seed,
            filter_success: s.filter_success,
            exec_noise: s.exec_noise,
            noise_per_episode: s.noise_per_episode,
            start_spread: s.start_spread,
        }
    }

    fn env(&self, env: &EnvSpec) -> EnvSpec {
        match env {
            EnvSpec::PointMass2d(s) => EnvSpec::PointMass2d(PointMassSpec { start_spread: self.start_spread, ..s.clone() }),
            other => other.clone(),
        }
    }

    fn episode_noise(&self, ep_seed: u64) -> f64 {
        if self.noise_per_episode {
            self.exec_noise * rng_from(ep_seed, stream::INIT).random::<f64>()
        } else {
            self.exec_noise
        }
    }
}

pub const DEFAULT_NOISE_PER_EPISODE: bool = false;

pub const DEFAULT_EXEC_NOISE: f64 = 0.3;

pub const DEFAULT_START_SPREAD: f64 = 0.0;

/// Rolls out `n_episodes` seeded episodes and keeps the successful ones.
pub fn collect(env: &EnvSpec, gains: &ExpertGains, pilot: &PilotSpec, n_episodes: usize, seed: u64) -> Result<Dataset> {
    collect_with(env, gains, pilot, &CollectConfig::new(n_episodes, seed))
}

/// Replays the executed actions of one collected episode; returns its outcome.
pub fn replay_episode(env: &EnvSpec, gains: &ExpertGains, pilot: &PilotSpec, cfg: &CollectConfig, ep_seed: u64) -> Result<OutcomeLabel> {
    rollout(&cfg.env(env), gains, pilot, cfg.episode_noise(ep_seed), ep_seed, &mut Vec::new())
}

fn rollout(
    env: &EnvSpec,
    gains: &ExpertGains,
    pilot: &PilotSpec,
    exec_noise: f64,
    ep_seed: u64,
    buf: &mut Vec<f64>,
) -> Result<OutcomeLabel> {
    let mut state = env.reset(ep_seed);
    let mut ps = PilotState::new(rng_from(ep_seed, stream::PILOT));
    let mut noise = rng_from(ep_seed, stream::SAMPLE);
    buf.clear();
    loop {
        let a = env.clamp_action(&pilot_action(env, gains, pilot, &mut ps, &state.observe(true))?);
        buf.extend(state.observe(false));
        buf.extend_from_slice(&a);
        let exec: Vec<f64> = if exec_noise > 0.0 {
            a.iter().map(|v| v + exec_noise * noise.sample::<f64, _>(StandardNormal)).collect()
        } else {
            a
        };
        let (next, out) = env.step(&state, &exec)?;
        state = next;
        if out.label.is_terminal() {
            return Ok(out.label);
        }
    }
}

pub fn collect_with(env: &EnvSpec, gains: &ExpertGains, pilot: &PilotSpec, cfg: &CollectConfig) -> Result<Dataset> {
    let CollectConfig { n_episodes, seed, filter_success, exec_noise, .. } = *cfg;
    if !(exec_noise >= 0.0) {
        return Err(Error::Config("exec_noise must be non-negative".into()));
    }
    if n_episodes == 0 {
        return Err(Error::Config("n_episodes must be positive".into()));
    }
    let env = &cfg.env(env);
    env.validate()?;
    pilot.validate()?;
    let width = env.state_dim() + env.action_dim();
    let mut rows = Vec::new();
    let mut episodes = Vec::new();
    let mut buf = Vec::new();
    for i in 0..n_episodes as u64 {
        let ep_seed = episode_seed(seed, i);
        let label = rollout(env, gains, pilot, cfg.episode_noise(ep_seed), ep_seed, &mut buf)?;
        if !filter_success || label == OutcomeLabel::Success {
            episodes.push(EpisodeSpan { id: i, seed: ep_seed, len: buf.len() / width });
            rows.extend_from_slice(&buf);
        }
    }
    if episodes.is_empty() {
        return Err(Error::NoDemonstrations(n_episodes));
    }
    let (obs_mean, obs_std) = column_stats(&rows, width, env.state_dim());
    let header = DatasetHeader {
        env: Some(env.kind()),
        state_dim: env.state_dim(),
        action_dim: env.action_dim(),
        count: rows.len() / width,
        seed,
        pilot: pilot.to_string(),
        filter_success,
        exec_noise,
        noise_per_episode: cfg.noise_per_episode,
        start_spread: cfg.start_spread,
        episodes_run: n_episodes,
        episodes,
        obs_mean,
        obs_std,
    };
    Ok(Dataset { header, rows })
}

pub fn save_dataset(ds: &Dataset) -> Result<Vec<u8>> {
    if ds.rows.len() != ds.header.count * ds.row_width() {
        return Err(Error::Format("record count mismatch".into()));
    }
    let json = serde_json::to_vec(&ds.header).map_err(|e| Error::Format(e.to_string()))?;
    let mut out = Vec::with_capacity(16 + json.len() + 8 * ds.rows.len());
    out.extend_from_slice(DATASET_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for v in &ds.rows {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn load_dataset(bytes: &[u8]) -> Result<Dataset> {
    if bytes.len() < 16 || &bytes[..8] != DATASET_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!("unsupported dataset version {version}")));
    }
    let len = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let body = bytes.get(16..16 + len).ok_or_else(|| Error::Format("truncated header".into()))?;
    let header: DatasetHeader = serde_json::from_slice(body).map_err(|e| Error::Format(format!("header: {e}")))?;
    let payload = &bytes[16 + len..];
    let width = header.state_dim + header.action_dim;
    if width == 0 || payload.len() % 8 != 0 || payload.len() / 8 != header.count * width {
        return Err(Error::Format("record count mismatch".into()));
    }
    if header.episodes.iter().map(|e| e.len).sum::<usize>() != header.count {
        return Err(Error::Format("episode lengths do not sum to record count".into()));
    }
    if header.obs_mean.len() != header.state_dim || header.obs_std.len() != header.state_dim {
        return Err(Error::Format("normalization stats do not match state_dim".into()));
    }
    let rows = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(Dataset { header, rows })
}

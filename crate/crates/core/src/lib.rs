//! Shared autonomy through partial diffusion.
//!
//! A denoising diffusion model is trained on goal-stripped expert
//! demonstrations. At run time the copilot diffuses the pilot's action part of
//! the way towards noise and denoises it back under the state-conditioned
//! model, trading fidelity to the pilot against conformity to expert behavior.

pub mod config;
pub mod copilot;
pub mod demos;
pub mod denoiser;
pub mod diffusion;
pub mod env;
pub mod error;
pub mod eval;
pub mod pilot;
pub mod rng;
pub mod train;

pub use config::Config;
pub use copilot::{AssistTrace, Copilot, CopilotConfig, DiffusionModel};
pub use demos::{collect, load_dataset, save_dataset, Dataset, DatasetHeader};
pub use denoiser::{AdamConfig, Checkpoint, CheckpointMeta, DenoiserParams, OptState};
pub use diffusion::NoiseSchedule;
pub use env::{EnvKind, EnvSpec, EnvState, Outcome, OutcomeLabel};
pub use error::{Error, Result};
pub use pilot::{ExpertGains, PilotKind, PilotSpec, PilotState};
pub use eval::{run_episode, sweep, EpisodeRecord, SweepPlan, SweepReport};
pub use train::{train, TrainConfig, TrainOutput};

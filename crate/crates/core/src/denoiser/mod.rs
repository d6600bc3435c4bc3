//! State-conditioned noise-prediction network.
//!
//! A 4-layer MLP over the concatenated `(state, noisy action)` vector. The
//! three hidden layers are multiplied element-wise by a learned per-step
//! embedding row before the softplus; the output layer is plain linear and
//! has the same width as the input.

mod adam;
mod checkpoint;
mod net;

pub use adam::{adam_step, AdamConfig, OptState};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointMeta, CHECKPOINT_MAGIC};
pub use net::{DenoiserParams, ForwardTrace, DEFAULT_HIDDEN};

//! Seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from a `u64`
//! obtained by mixing a parent seed with a stream tag, so that independent
//! components (environment, pilot, copilot) never share a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream tags for [`derive_seed`].
pub mod stream {
    pub const ENV: u64 = 0x454e_5600;
    pub const PILOT: u64 = 0x5049_4c00;
    pub const COPILOT: u64 = 0x434f_5000;
    pub const EPISODE: u64 = 0x4550_4900;
    pub const TRAIN: u64 = 0x5452_4e00;
    pub const INIT: u64 = 0x494e_4900;
    pub const SAMPLE: u64 = 0x534d_5000;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(parent: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ tag.rotate_left(17))
}

pub fn rng_from(parent: u64, tag: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(parent, tag))
}

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

//! Deterministic random streams.
//!
//! Every stochastic draw in training is taken from a stream keyed by
//! `(seed, step, purpose)`, so a run can be resumed from any step without
//! serializing generator state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

/// Stream purposes used by the trainer.
pub mod purpose {
    pub const INIT: u64 = 1;
    pub const BATCH: u64 = 2;
    pub const STUDENT_DROPOUT: u64 = 3;
    pub const TEACHER_MC: u64 = 4;
    pub const TEACHER_NOISE: u64 = 5;
    pub const SPLIT: u64 = 6;
    pub const SYNTH: u64 = 7;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, step: u64, purpose: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ step) ^ purpose.rotate_left(32))
}

pub fn stream(seed: u64, step: u64, purpose: u64) -> SeededRng {
    SeededRng::seed_from_u64(derive_seed(seed, step, purpose))
}

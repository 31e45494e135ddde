//! Seed derivation. Every random draw in the crate comes from a ChaCha8
//! stream keyed by the run seed, so independent consumers never share state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_SPLIT: u64 = 1;
pub const STREAM_WEIGHTS: u64 = 2;
pub const STREAM_NOISE: u64 = 3;
pub const STREAM_BATCHES: u64 = 4;
pub const STREAM_HIGH_INIT: u64 = 5;
pub const STREAM_LOW_INIT: u64 = 6;
pub const STREAM_SYNTH: u64 = 7;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

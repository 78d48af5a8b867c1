//! Per-trial random streams.
//!
//! Every trial gets its own ChaCha8 stream: the key is derived from the
//! master seed with `seed_from_u64` and the 64-bit stream id is
//! `(point << 32) | trial`, where `point` indexes the sweep point (for
//! example the position in the delta list) and `trial` the Monte Carlo
//! repetition. A trial therefore draws the same numbers whether it runs
//! alone, in a different order or on another thread.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn stream_id(point: usize, trial: usize) -> u64 {
    ((point as u64) << 32) | (trial as u64 & 0xffff_ffff)
}

pub fn trial_rng(master: u64, point: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream_id(point, trial));
    rng
}

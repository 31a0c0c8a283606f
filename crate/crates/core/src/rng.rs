//! Counter-based random streams.
//!
//! Every consumer of randomness gets its own ChaCha stream keyed by
//! `(seed, trial, role)`, so Monte Carlo trials can run on any number of
//! threads in any order and still reproduce bit-identically. Paired
//! algorithm comparisons reuse the truth and frame streams and give each
//! filter the same filter stream (common random numbers).

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// What a stream is used for; part of the stream key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamRole {
    /// Ground-truth process noise.
    Truth = 0,
    /// Sensor noise when rendering frames.
    Frames = 1,
    /// Everything inside a filter instance (proposals, resampling, EM
    /// seeding).
    Filter = 2,
}

/// Derive the `(seed, trial, role)` stream.
pub fn substream(seed: u64, trial: u64, role: StreamRole) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    // ChaCha exposes 2^64 independent streams per key; reserve the low
    // bits for the role so trials never collide.
    rng.set_stream(trial.wrapping_mul(8) + role as u64);
    rng
}

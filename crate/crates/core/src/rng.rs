//! Seeded random streams.
//!
//! Every simulation entry point takes a [`SimRng`]. Batches of independent
//! episodes draw their generators from [`stream`], keyed by a base seed and the
//! episode index, so results do not depend on how work is split across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

pub type SimRng = ChaCha12Rng;

pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// The `index`-th independent stream under `seed`.
pub fn stream(seed: u64, index: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Splits off a child generator; the parent advances by one draw.
pub fn fork(rng: &mut SimRng) -> SimRng {
    SimRng::seed_from_u64(rng.next_u64())
}

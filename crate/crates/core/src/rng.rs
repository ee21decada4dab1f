//! Reproducible random streams.
//!
//! Every stochastic operation takes an explicit generator. Parallel work
//! derives independent substreams deterministically from `(seed, index)`,
//! so results do not depend on thread count or scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// The crate-wide generator type.
pub type Stream = ChaCha12Rng;

/// Root stream for a seed.
pub fn stream(seed: u64) -> Stream {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Independent substream `index` of `seed`; distinct indices never overlap.
pub fn substream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

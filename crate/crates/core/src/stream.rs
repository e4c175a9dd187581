//! Seeded random streams.
//!
//! Every randomized operation takes an explicit generator. Work that fans out
//! (trials, Monte-Carlo chunks, experiment rows) derives one independent
//! substream per unit of work from a parent seed and the unit's index, so the
//! results do not depend on how the work is scheduled.
//!
//! The derivation is `splitmix64(seed + (index + 1) * 0x9E3779B97F4A7C15)`
//! (wrapping arithmetic). For a fixed index it is a bijection on the seed.
//! The derived value seeds a ChaCha8 generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 finalizer, a bijection on `u64`.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of substream `index` under `seed`.
pub fn substream_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn rng_from_seed(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

pub fn substream(seed: u64, index: u64) -> StreamRng {
    rng_from_seed(substream_seed(seed, index))
}

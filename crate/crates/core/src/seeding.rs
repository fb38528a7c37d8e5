//! Seed derivation.
//!
//! Every random stream in a run descends from one top-level `u64` seed.
//! Child seeds are derived with [`derive_seed`], which mixes the parent seed,
//! a purpose tag, and an index through SplitMix64. Per-item substreams
//! (one per training sample during augmentation) use the ChaCha stream id
//! instead, so that item `i` always sees the same draws regardless of
//! iteration order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags for [`derive_seed`].
pub mod tag {
    pub const FOLDS: u64 = 0x01;
    pub const FOLD: u64 = 0x02;
    pub const AUGMENT: u64 = 0x03;
    pub const INIT: u64 = 0x04;
    pub const SHUFFLE: u64 = 0x05;
    pub const SITE: u64 = 0x06;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ tag) ^ index)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent substream `stream` of the generator seeded with `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

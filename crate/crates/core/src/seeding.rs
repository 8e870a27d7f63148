//! Stable seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator seeded from a 64-bit
//! value produced here, so results do not depend on the platform, the Rust
//! version, or the order in which independent streams are consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive mix of several words into one seed.
pub fn mix_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x6A09_E667_F3BC_C908, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent sub-stream `(seed, tag, index)`.
pub fn substream(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    rng_from_seed(mix_seed(&[seed, tag, index]))
}

//! Deterministic seed derivation.
//!
//! Every random stream in the pipeline (shuffling, negative sampling,
//! dropout, evaluation negatives) is keyed by mixing structured components
//! into a single u64, so results are independent of batch assembly order and
//! worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Mixes the parts into one seed; order-sensitive.
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut acc = 0x243f_6a88_85a3_08d3; // pi fraction, arbitrary non-zero start
    for &p in parts {
        acc = splitmix64(acc ^ p);
    }
    acc
}

pub fn rng_from(parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(parts))
}

//! Per-realization random streams.
//!
//! Realization `r` of a run with master seed `s` draws from
//! `ChaCha8Rng::seed_from_u64(mix_seed(s, r))`. ChaCha output is specified
//! bit-for-bit, so streams agree across platforms and thread schedules.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Multiply-xor mixing of `(master_seed, index)` into a 64-bit stream seed
/// (the splitmix64 finalizer applied to `master ^ golden * (index + 1)`).
pub const fn mix_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn realization_rng(master_seed: u64, realization: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(master_seed, realization))
}

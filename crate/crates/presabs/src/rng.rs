//! Deterministic random stream derivation.
//!
//! Every random quantity in the crate flows from a [`ChaCha8Rng`] seeded with
//! [`derive_rng`], which hashes a master seed together with an integer path
//! such as `[DATASET_STREAM, scenario, replicate]`. Distinct paths yield
//! independent streams, so datasets and method runs can be produced in any
//! order, serially or in parallel, without changing a single output bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Path tag for dataset generation streams.
pub const DATASET_STREAM: u64 = 1;
/// Path tag for clustering-method streams.
pub const METHOD_STREAM: u64 = 2;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer; bijective on u64.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a reproducible ChaCha8 generator from a master seed and a path of
/// integers identifying the consumer.
pub fn derive_rng(master_seed: u64, path: &[u64]) -> ChaCha8Rng {
    let mut state = mix(master_seed.wrapping_add(GOLDEN));
    for &part in path {
        state = mix(state.wrapping_add(GOLDEN) ^ part.wrapping_mul(GOLDEN));
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        state = mix(state.wrapping_add(GOLDEN));
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

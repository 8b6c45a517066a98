//! Seeded randomness.
//!
//! Every random draw in the crate goes through [`ChaCha8Rng`] seeded with
//! [`SeedableRng::seed_from_u64`]. ChaCha8 output is specified bit-for-bit and
//! does not depend on the platform, so a seed reproduces the same item
//! memories and perturbations on every build.
//!
//! Per-item streams (one per image and perturbation kind) are derived with
//! [`derive_seed`] so that work items can be processed in any order, or in
//! parallel, without changing results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type HdcRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> HdcRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combine a base seed with a sequence of stream identifiers.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(mix64(base), |acc, &p| mix64(acc ^ mix64(p)))
}

/// Stable 64-bit FNV-1a hash, used to fold string identifiers into seeds.
pub fn hash_str(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

//! Deterministic RNG streams.
//!
//! Every stochastic component draws from its own ChaCha stream derived from
//! a master seed and a stream tag. Parallel lanes (Monte Carlo iterations,
//! evaluation rollouts) get independent streams, so results do not depend on
//! scheduling or lane count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags for the components of a training/evaluation run. Values are
/// part of the determinism contract: changing them changes every result.
pub mod stream {
    /// Channel realizations consumed by the training loop.
    pub const WORLD: u64 = 0x01;
    /// Stochastic action sampling during inference steps.
    pub const POLICY: u64 = 0x02;
    /// Batch index draws and reparameterization noise in learning steps.
    pub const LEARN: u64 = 0x03;
    /// Network parameter initialization.
    pub const INIT: u64 = 0x04;
    /// Standardization calibration draws.
    pub const CALIBRATE: u64 = 0x05;
    /// Held-out evaluation realizations.
    pub const EVAL: u64 = 0x06;
}

/// splitmix64 step; the standard 64-bit finalizer used for seed derivation.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a master seed and a stream tag.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    splitmix64(master ^ splitmix64(tag))
}

/// Derive a child seed from a master seed and two tags (e.g. grid cell and
/// iteration index of a Monte Carlo sweep).
pub fn derive_seed2(master: u64, tag_a: u64, tag_b: u64) -> u64 {
    derive_seed(derive_seed(master, tag_a), tag_b)
}

/// RNG for a derived stream.
pub fn stream_rng(master: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tag))
}

/// RNG seeded directly (used where a seed is already fully derived).
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derived_streams_are_stable_and_distinct() {
        let a = derive_seed(42, stream::WORLD);
        let b = derive_seed(42, stream::POLICY);
        assert_ne!(a, b);
        assert_eq!(a, derive_seed(42, stream::WORLD));

        let mut r1 = stream_rng(42, stream::WORLD);
        let mut r2 = stream_rng(42, stream::WORLD);
        let x1: f64 = r1.random();
        let x2: f64 = r2.random();
        assert_eq!(x1, x2);
    }

    #[test]
    fn two_tag_derivation_depends_on_both_tags() {
        assert_ne!(derive_seed2(7, 0, 1), derive_seed2(7, 1, 0));
        assert_ne!(derive_seed2(7, 3, 4), derive_seed2(8, 3, 4));
    }
}

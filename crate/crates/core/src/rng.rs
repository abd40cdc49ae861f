//! Seeding.
//!
//! Every sampler in this crate draws from [`ChaCha8Rng`], seeded through
//! `seed_from_u64`. The ChaCha stream is value-stable across platforms and
//! `rand_chacha` releases, so a seed pins the output bit for bit.
//!
//! Independent streams (one per trial, one for training vs. test data) are
//! derived with [`derive_seed`], a SplitMix64-style mixer applied to the
//! parent seed and a list of indices. Seeds never come from a shared
//! sequential stream, so the order in which trials execute cannot change
//! what they draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `indices` into `base`: `s ← mix64(s ^ mix64(i + 1))` for each
/// index in turn, starting from `s = mix64(base)`.
pub fn derive_seed(base: u64, indices: &[u64]) -> u64 {
    indices
        .iter()
        .fold(mix64(base), |s, &i| mix64(s ^ mix64(i.wrapping_add(1))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<u64> = (0..8)
            .map({
                let mut r = seeded(7);
                move |_| r.gen()
            })
            .collect();
        let b: Vec<u64> = (0..8)
            .map({
                let mut r = seeded(7);
                move |_| r.gen()
            })
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn derived_seeds_depend_on_order_and_value() {
        let s = derive_seed(1, &[0, 1, 2]);
        assert_eq!(s, derive_seed(1, &[0, 1, 2]));
        assert_ne!(s, derive_seed(1, &[0, 2, 1]));
        assert_ne!(s, derive_seed(2, &[0, 1, 2]));
        assert_ne!(derive_seed(1, &[0]), derive_seed(1, &[0, 0]));
    }

    #[test]
    fn mixer_is_pinned() {
        // Reference outputs of SplitMix64 seeded with 0.
        assert_eq!(mix64(0), 0xE220_A839_7B1D_CDAF);
    }
}

//! Seeding discipline: every randomized operation takes an explicit `u64`
//! seed and builds a ChaCha8 stream from it, so results are reproducible
//! across platforms and independent of global state.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic RNG for a given seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent stream for sub-task `stream` of a master seed
/// (per candidate, per graph, per chunk). SplitMix64 finalizer keeps
/// nearby ids statistically unrelated.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<u64> = (0..8).map(|_| rng(7).gen()).collect();
        let b: Vec<u64> = (0..8).map(|_| rng(7).gen()).collect();
        // constructing twice restarts the stream
        let mut r1 = rng(7);
        let mut r2 = rng(7);
        for _ in 0..32 {
            assert_eq!(r1.gen::<u64>(), r2.gen::<u64>());
        }
        assert_eq!(a[0], b[0]);
    }

    #[test]
    fn derived_streams_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
        assert_eq!(derive_seed(1, 3), derive_seed(1, 3));
    }
}

//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a generator that is a pure
//! function of `(master_seed, point, realization, interval)`. Workers never
//! share a generator, so ensembles are reproducible at any thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Identifies one temporal-network realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamKey {
    pub master_seed: u64,
    pub point: u64,
    pub realization: u64,
}

impl StreamKey {
    pub fn new(master_seed: u64, point: u64, realization: u64) -> Self {
        Self { master_seed, point, realization }
    }

    /// Shorthand for a single run outside any sweep.
    pub fn single(master_seed: u64) -> Self {
        Self::new(master_seed, 0, 0)
    }

    pub fn with_realization(self, realization: u64) -> Self {
        Self { realization, ..self }
    }

    /// Generator for the graph of interval `interval` of this realization.
    pub fn interval_rng(&self, interval: u64) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        seed[0..8].copy_from_slice(&self.master_seed.to_le_bytes());
        seed[8..16].copy_from_slice(&self.point.to_le_bytes());
        seed[16..24].copy_from_slice(&self.realization.to_le_bytes());
        seed[24..32].copy_from_slice(b"tsearch1");
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(interval);
        rng
    }
}

/// SplitMix64 finalizer, used to turn parameter values into point keys.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Point key derived from the parameter values themselves, so inserting new
/// sweep points never changes the streams of existing ones.
pub fn point_key(tau: f64, p: f64) -> u64 {
    mix64(mix64(tau.to_bits()) ^ p.to_bits().rotate_left(17))
}

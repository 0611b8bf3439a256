//! Seeding policy.
//!
//! Every random draw in the crate comes from [`ChaCha8Rng`], a portable
//! counter-based generator. Sub-seeds for independent work items (sweep
//! points, iterative circuits, Bayesian rounds) are derived from a parent
//! seed with a SplitMix64 finalizer, and each shot of a trajectory run reads
//! its own ChaCha stream, so results never depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A 64-bit seed. Identical seeds give bit-identical samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        RngSeed(seed)
    }

    /// Child seed for work item `index`.
    pub fn derive(self, index: u64) -> RngSeed {
        RngSeed(splitmix64(self.0 ^ splitmix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15))))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Generator for shot `shot`: same key, independent stream.
    pub fn shot_rng(self, shot: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(shot);
        rng
    }
}

impl From<u64> for RngSeed {
    fn from(v: u64) -> Self {
        RngSeed(v)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

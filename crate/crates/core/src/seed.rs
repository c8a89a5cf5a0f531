//! Explicit, splittable seeds.
//!
//! Every stochastic operation takes a [`Seed`]. Work that fans out (bootstrap
//! replicates, repetitions, candidate costs) derives one child seed per task
//! index, so the output never depends on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// The generator behind every seed. ChaCha output is platform independent.
pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub value: u64,
    #[serde(default)]
    pub stream: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Seed {
    pub const fn new(value: u64) -> Self {
        Seed { value, stream: 0 }
    }

    /// Seed for sub-task `k`; a pure function of `(value, stream, k)`.
    pub fn derive(&self, k: u64) -> Seed {
        let stream = splitmix64(splitmix64(self.stream ^ 0xA076_1D64_78BD_642F).wrapping_add(k));
        Seed {
            value: self.value,
            stream,
        }
    }

    pub fn rng(&self) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.value);
        rng.set_stream(self.stream);
        rng
    }
}

impl From<u64> for Seed {
    fn from(value: u64) -> Self {
        Seed::new(value)
    }
}

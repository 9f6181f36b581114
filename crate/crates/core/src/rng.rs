//! Seed handling for reproducible rollouts.
//!
//! Every simulation index gets its own ChaCha stream keyed by the root seed,
//! so the draws of rollout `j` never depend on which worker runs it or on
//! how many rollouts ran before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Random number generator handed to policies, environments and value estimators.
pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SeededRng {
    root_seed: u64,
}

impl SeededRng {
    pub fn new(root_seed: u64) -> Self {
        Self { root_seed }
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    /// Independent stream for simulation index `index`.
    pub fn stream(&self, index: u64) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.root_seed);
        rng.set_stream(index);
        rng
    }

    /// A child seed for a distinct purpose (a baseline run, a trajectory turn, ...).
    pub fn derive(&self, tag: u64) -> SeededRng {
        SeededRng::new(splitmix64(self.root_seed ^ splitmix64(tag.wrapping_add(0x5851_f42d_4c95_7f2d))))
    }
}

impl From<u64> for SeededRng {
    fn from(seed: u64) -> Self {
        SeededRng::new(seed)
    }
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over arbitrary bytes; stable across platforms and compiler versions.
pub fn fingerprint(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

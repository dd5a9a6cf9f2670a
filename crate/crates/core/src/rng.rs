//! Derived random streams.
//!
//! Every consumer of randomness gets its own ChaCha8 stream whose seed is a
//! hash chain over the master seed and a path of integers, so results do not
//! depend on evaluation order or the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DOMAIN_DATA: u64 = 1;
pub const DOMAIN_SPLIT: u64 = 2;
pub const DOMAIN_MINIBATCH: u64 = 3;
pub const DOMAIN_SHOTS: u64 = 4;
pub const DOMAIN_INIT: u64 = 5;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Position in the tree of derived streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn root(master_seed: u64) -> Self {
        Self(splitmix64(master_seed))
    }

    /// Child stream; `k.child(a).child(b)` differs from `k.child(b).child(a)`.
    pub fn child(self, index: u64) -> Self {
        Self(splitmix64(self.0 ^ splitmix64(index.wrapping_mul(0xd6e8_feb8_6659_fd93))))
    }

    pub fn path(self, indices: &[u64]) -> Self {
        indices.iter().fold(self, |k, &i| k.child(i))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    pub fn value(self) -> u64 {
        self.0
    }
}

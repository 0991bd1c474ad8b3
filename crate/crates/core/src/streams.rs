//! Counter-based random streams.
//!
//! Every trajectory gets its own ChaCha8 stream. The 256-bit key is derived
//! from `(seed, domain)` by SplitMix64 expansion and the 64-bit stream
//! selector is the trajectory index, so trajectory `i` sees the same numbers
//! no matter how trajectories are distributed over workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Separates the streams of unrelated experiments that share one seed.
pub mod domain {
    pub const EXITS: u64 = 1;
    pub const LADDERS: u64 = 2;
    pub const VISITS: u64 = 3;
    pub const STEPS: u64 = 4;
    pub const TAU: u64 = 5;
    pub const SPHERE: u64 = 6;
    pub const TEST: u64 = 0xFFFF;
}

/// A key from which independent per-trajectory generators are split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    seed: u64,
    domain: u64,
    key: [u8; 32],
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl StreamKey {
    pub fn new(seed: u64, domain: u64) -> Self {
        let mut state = seed ^ domain.rotate_left(32) ^ 0x6C61_6D62_6572_7421;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Self { seed, domain, key }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn domain(&self) -> u64 {
        self.domain
    }

    /// The generator of stream `index`, positioned at its start.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(index);
        rng
    }
}

//! Addressable random streams.
//!
//! Every random draw in the crate comes from a stream named by a master seed
//! and a path of integers (for example `[cell, replication, fold]`). The pair
//! is hashed into the key of a ChaCha generator, so a stream's contents do not
//! depend on which thread runs it or in which order streams are created.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Generator type handed to every sampler.
pub type StreamRng = ChaCha8Rng;

/// Names one random stream: `(master_seed, stream_path)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_path: Vec<u64>,
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed, stream_path: Vec::new() }
    }

    /// The stream one level below this one.
    #[must_use]
    pub fn child(&self, index: u64) -> Self {
        let mut stream_path = Vec::with_capacity(self.stream_path.len() + 1);
        stream_path.extend_from_slice(&self.stream_path);
        stream_path.push(index);
        Self { master_seed: self.master_seed, stream_path }
    }

    /// Builds the generator for this stream. Pure function of `self`.
    pub fn rng(&self) -> StreamRng {
        StreamRng::from_seed(self.key())
    }

    fn key(&self) -> [u8; 32] {
        // splitmix64 absorption; the path length is mixed in so that
        // `[a]` and `[a, 0]` cannot collide by construction.
        let mut state = splitmix64(self.master_seed ^ 0x5350_4353_5345_4544);
        state = splitmix64(state ^ self.stream_path.len() as u64);
        for &step in &self.stream_path {
            state = splitmix64(state ^ splitmix64(step.wrapping_add(0x9e37_79b9_7f4a_7c15)));
        }
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        key
    }
}

impl std::fmt::Display for SeedSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.master_seed)?;
        for step in &self.stream_path {
            write!(f, "/{step}")?;
        }
        Ok(())
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

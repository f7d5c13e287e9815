//! Seeded, counter-based random streams.
//!
//! Every stochastic step draws from a ChaCha8 stream addressed by
//! `(seed, stream)`, so results do not depend on scheduling or on the
//! number of worker threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Number of prior draws generated from one stream.
pub const PRIOR_CHUNK: usize = 1024;

const DOMAIN_SHIFT: u32 = 48;

/// Stream families. Each family owns `2^48` stream indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Prior = 1,
    Resample = 2,
    ChainStart = 3,
    Chain = 4,
    Dataset = 5,
    Mask = 6,
    Replicate = 7,
    Simulation = 8,
}

pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    debug_assert!(index < 1 << DOMAIN_SHIFT);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << DOMAIN_SHIFT) | index);
    rng
}

/// Child seed for replicate or sub-run `index` of a master seed.
pub fn derive_seed(seed: u64, domain: Domain, index: u64) -> u64 {
    stream(seed, domain, index).next_u64()
}

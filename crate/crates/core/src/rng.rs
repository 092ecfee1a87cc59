//! Seeded random streams.
//!
//! Every consumer of randomness draws from its own ChaCha stream, derived
//! from a master seed, a [`Purpose`] and an index (trial number, grid
//! point, worker). Streams never overlap, so adding draws in one component
//! leaves every other component's sequence untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Topology = 1,
    Fading = 2,
    Noise = 3,
    Genetic = 4,
    DprcInit = 5,
    RateTable = 6,
    Oracle = 7,
}

/// Stream for `(purpose, index)` under `master`.
pub fn stream(master: u64, purpose: Purpose, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((purpose as u64) << 56) ^ (index & ((1 << 56) - 1)));
    rng
}

/// Child seed for component `index`, by one SplitMix64 step.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream index for trial `trial` of a `k`-pair network.
pub fn trial_index(k: usize, trial: usize) -> u64 {
    ((k as u64) << 32) | trial as u64
}

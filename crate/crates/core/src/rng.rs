//! Random stream contract.
//!
//! A run owns exactly one [`SimRng`], seeded from a single `u64`. Within a
//! run the stream is consumed in this fixed order:
//!
//! 1. initialization: one normal draw per agent in id order (locals first,
//!    then migrants), then host placement of each local in id order, then
//!    home placement of the migrants (one partial shuffle of the home cells);
//! 2. per tick, intake: one Bernoulli draw per waiting migrant in id order,
//!    then one placement draw per entrant in id order;
//! 3. per tick, movement: one shuffle of the host agents, then at most one
//!    destination draw per agent in that order.
//!
//! Interaction, memory, update and classification phases draw nothing.
//!
//! Sweep replications get their seeds from [`derive_seed`], which is
//! injective in `(condition, replication)` for a fixed master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer; a bijection on `u64`.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replication `replication` of condition `condition`.
///
/// Both indices must fit in 32 bits; the packed pair, the xor with the master
/// seed and both mixing rounds are bijections, so distinct pairs never
/// collide.
pub fn derive_seed(master: u64, condition: usize, replication: usize) -> u64 {
    assert!(
        condition <= u32::MAX as usize && replication <= u32::MAX as usize,
        "sweep indices exceed 32 bits"
    );
    let packed = ((condition as u64) << 32) | replication as u64;
    mix64(mix64(packed) ^ master)
}

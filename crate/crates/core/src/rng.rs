//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha8 keyed by
//! `seed_from_u64(master_seed)`, with the 64-bit ChaCha stream id set to
//! `(purpose << 48) | index`. Streams for different purposes, or for
//! different trials of one purpose, never overlap, and a trial's draws do not
//! depend on how many other trials ran or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u16)]
pub enum Purpose {
    Gbm = 1,
    Shuffle = 2,
    Bootstrap = 3,
    Mixture = 4,
    Control = 5,
}

const INDEX_BITS: u32 = 48;

pub fn stream(master_seed: u64, purpose: Purpose, index: u64) -> StreamRng {
    assert!(index < 1 << INDEX_BITS, "stream index out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((purpose as u64) << INDEX_BITS) | index);
    rng
}

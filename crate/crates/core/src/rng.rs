//! Deterministic random streams.
//!
//! Every draw in the crate comes from a ChaCha stream keyed by
//! `(seed, purpose, index, step)`, so replay does not depend on the order in
//! which tasks or runs are evaluated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for. Keeps training draws, estimation draws and
/// strategy draws independent even when they share index and step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Train = 1,
    Estimate = 2,
    Strategy = 3,
    Instance = 4,
    MonteCarlo = 5,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Stream for `(seed, purpose, index, step)`.
pub fn stream(seed: u64, purpose: Purpose, index: u64, step: u64) -> StreamRng {
    let mut key = [0u8; 32];
    let mut h = splitmix(seed);
    for (i, part) in [purpose as u64, index, step, 0x5049_4b45].into_iter().enumerate() {
        h = splitmix(h ^ part);
        key[i * 8..(i + 1) * 8].copy_from_slice(&h.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

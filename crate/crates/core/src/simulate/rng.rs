//! Counter-based random streams.
//!
//! Every path draws from its own ChaCha stream keyed by `(master_seed, engine, lane)` with the
//! path index as the stream number, so a batch is bit-identical however it is chunked or
//! scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Engine identifiers used in stream keys.
pub mod engine {
    pub const CHOLESKY: u64 = 1;
    pub const CIRCULANT: u64 = 2;
    pub const FBM: u64 = 3;
    pub const BRIDGE: u64 = 4;
    pub const WINDOW: u64 = 5;
    pub const FIELD: u64 = 6;
}

const KEY_TAG: u64 = 0x6578_6375_7273_696f; // "excursio"

pub type Stream = ChaCha8Rng;

/// Stream for `path` under `(seed, engine, lane)`.
pub fn stream(seed: u64, engine: u64, lane: u64, path: u64) -> Stream {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&engine.to_le_bytes());
    key[16..24].copy_from_slice(&lane.to_le_bytes());
    key[24..].copy_from_slice(&KEY_TAG.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(path);
    rng
}

#[inline]
pub fn normal(rng: &mut Stream) -> f64 {
    rng.sample(StandardNormal)
}

pub fn fill_normal(rng: &mut Stream, out: &mut [f64]) {
    for x in out {
        *x = rng.sample(StandardNormal);
    }
}

/// Uniform on the open interval (0, 1).
#[inline]
pub fn open_uniform(rng: &mut Stream) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

//! Deterministic random streams.
//!
//! Every random draw in the crate comes from ChaCha8, a counter-based
//! generator. A stream is identified by a `(seed, stream)` pair: the 32-byte
//! key holds `seed` as little-endian in bytes `0..8` and zeros elsewhere, and
//! `stream` selects the ChaCha stream id. Reproducing a draw in another
//! implementation only requires a ChaCha8 keyed the same way.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids used by the crate. Distinct purposes never share a stream.
pub mod streams {
    pub const INIT: u64 = 1;
    pub const ORDERING: u64 = 2;
    pub const BLOBS: u64 = 3;
    pub const RINGS: u64 = 4;
    pub const SPLIT: u64 = 5;
    pub const IDX_SHUFFLE: u64 = 6;
    pub const DISTILL: u64 = 7;
    pub const SUBSET: u64 = 8;
    pub const HESSIAN: u64 = 9;
    pub const BATCH: u64 = 10;
}

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Stream whose id also folds in a sub-index, e.g. the epoch of an ordering.
pub fn substream(seed: u64, stream_id: u64, index: u64) -> ChaCha8Rng {
    stream(seed, (stream_id << 32) ^ index)
}

/// Fisher-Yates permutation of `0..n`.
pub fn permutation(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx
}

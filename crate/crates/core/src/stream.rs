//! Counter-addressed random streams.
//!
//! Every random draw is a pure function of `(seed, stream, slot, draw)`: the
//! ChaCha keystream for `(seed, stream)` is addressed by word position, and
//! each slot owns a fixed-width window of it. Work can therefore be split
//! across any number of threads without changing a single value.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Domain tags keep unrelated consumers of one seed apart.
pub mod tag {
    pub const POTENTIAL_1D: u64 = 1;
    pub const TREE_POOL: u64 = 2;
    pub const TWO_PERIODIC: u64 = 3;
    pub const PERCOLATION: u64 = 4;
    pub const TRUNCATION: u64 = 5;
    pub const CALIBRATION: u64 = 6;
    pub const SCAN: u64 = 7;
}

/// Stream id from a domain tag and an index (generation, trial, ...).
#[inline]
pub fn stream_id(tag: u64, index: u64) -> u64 {
    (tag << 56) ^ index
}

pub struct Stream {
    rng: ChaCha8Rng,
}

impl Stream {
    /// Stream positioned at the first draw of `slot`, where each slot owns
    /// `words_per_slot` 64-bit draws.
    pub fn at(seed: u64, stream: u64, slot: u64, words_per_slot: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        // word_pos counts 32-bit words
        rng.set_word_pos(2 * slot as u128 * words_per_slot as u128);
        Stream { rng }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits.
    #[inline]
    pub fn unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Index in `0..n` from exactly one draw (multiply-shift; bias ≤ n/2⁶⁴).
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        ((self.rng.next_u64() as u128 * n as u128) >> 64) as usize
    }
}

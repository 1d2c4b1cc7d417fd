//! Seeded, platform-stable random streams.
//!
//! Every stream is a ChaCha8 generator keyed by a seed and selected by a
//! stream id, so independent consumers (units, sides, trials) never share
//! state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        SeededRng { inner }
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform on (0, 1].
    pub fn uniform_open_closed(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn gaussian(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn gaussian_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.gaussian()).collect()
    }
}

/// Packs a tag and an index into a stream id.
pub fn stream_id(tag: u32, index: u64) -> u64 {
    ((tag as u64) << 40) ^ index
}

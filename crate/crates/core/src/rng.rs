//! Seeded random stream shared by every stochastic experiment.
//!
//! A single ChaCha20 stream is created per experiment from the configured
//! seed. Uniform doubles take the top 53 bits of one `u64` word, so the draw
//! order alone fixes every sample:
//!
//! 1. true weights θ* (one draw per target feature),
//! 2. initial weights θ₁ (one draw per hypothesis feature),
//! 3. inputs x_t for t = 1..T (one draw per input coordinate, stage-major).

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

#[derive(Debug, Clone)]
pub struct SeededStream {
    inner: ChaCha20Rng,
}

impl SeededStream {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    /// Uniform draw on [0, 1).
    pub fn unit(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw on [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn uniform_vec(&mut self, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|_| self.uniform(lo, hi)).collect()
    }

    pub fn below(&mut self, n: u64) -> u64 {
        (self.unit() * n as f64) as u64 % n.max(1)
    }
}

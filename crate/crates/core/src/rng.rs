//! Counter-addressed random streams.
//!
//! Every draw is addressed by `(seed, stream, step)`: the seed keys a ChaCha8
//! generator, the stream selects an independent ChaCha stream (one per
//! trajectory or per sample pair) and the step fixes the word position. Two
//! simulations asking for the same address see the same numbers regardless
//! of thread scheduling, which is what shared-noise pairing relies on.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

/// 32-bit words reserved per step. Each normal consumes four words (two
/// `f64` uniforms), so a step may draw up to 64 normals.
pub const WORDS_PER_STEP: u128 = 256;

#[derive(Clone, Debug)]
pub struct SplitStream {
    inner: ChaCha8Rng,
}

impl SplitStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    /// Stream positioned at the start of `step`.
    pub fn at(seed: u64, stream: u64, step: u64) -> Self {
        let mut s = Self::new(seed, stream);
        s.seek(step);
        s
    }

    pub fn seek(&mut self, step: u64) {
        self.inner.set_word_pos(step as u128 * WORDS_PER_STEP);
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Standard normal by Box-Muller; always consumes exactly two uniforms.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for z in out {
            *z = self.normal();
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

/// Fixed-size standard-normal increments for one step of one trajectory.
pub fn step_noise(seed: u64, stream: u64, step: u64, out: &mut [f64]) {
    SplitStream::at(seed, stream, step).fill_normal(out);
}

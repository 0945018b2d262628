//! Counter-addressed Gaussian draws.
//!
//! Each noise mode owns a ChaCha8 stream keyed by `(seed, mode)`; the draw for
//! time step `j` sits at a fixed word offset, so any sub-path can be
//! regenerated without replaying earlier steps.

use std::f64::consts::PI;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Words of keystream consumed per `(step, mode)` draw.
const WORDS_PER_DRAW: u128 = 4;

/// Largest supported fine-grid length. Increments are quantised so that sums
/// of up to this many of them are exact in `f64`.
pub const MAX_FINE_STEPS: usize = 1 << 20;

/// Quantisation exponent: increments are integer multiples of a power of two
/// `q` with `sd / q` in `[2^28, 2^29)`.
const QUANT_BITS: i32 = 28;

pub(crate) struct ModeStream {
    rng: ChaCha8Rng,
}

impl ModeStream {
    pub(crate) fn new(seed: u64, mode: usize, first_step: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(mode as u64);
        rng.set_word_pos(first_step as u128 * WORDS_PER_DRAW);
        Self { rng }
    }

    /// Next pair of independent standard normals (Box-Muller).
    pub(crate) fn next_pair(&mut self) -> (f64, f64) {
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        // u1 in (0, 1], u2 in [0, 1)
        let u1 = ((a >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (b >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        (r * c, r * s)
    }
}

/// Standard normal pair for `(seed, step, mode)`.
pub fn gaussian_pair(seed: u64, step: usize, mode: usize) -> (f64, f64) {
    ModeStream::new(seed, mode, step).next_pair()
}

/// Power-of-two quantum for a Gaussian with standard deviation `sd`.
pub(crate) fn quantum(sd: f64) -> f64 {
    if sd <= 0.0 {
        return 0.0;
    }
    let e = sd.log2().floor() as i32 - QUANT_BITS;
    2f64.powi(e)
}

#[inline]
pub(crate) fn quantize(x: f64, q: f64) -> f64 {
    if q == 0.0 {
        0.0
    } else {
        (x / q).round() * q
    }
}

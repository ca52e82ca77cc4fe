//! Portable SplitMix64 generator with a Box–Muller Gaussian transform.
//!
//! Every deviate consumed by the simulator comes from here, so trajectories
//! are reproducible bit-for-bit across platforms and implementations.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// 2^-53
const UNIT: f64 = 1.0 / (1u64 << 53) as f64;

#[inline]
fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for stream `index` derived from `base`: the `(index + 1)`-th output
/// of a SplitMix64 stream seeded with `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    finalize(base.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Maps a raw 64-bit draw onto (0, 1] using its top 53 bits.
#[inline]
pub fn uniform_from_bits(raw: u64) -> f64 {
    ((raw >> 11) + 1) as f64 * UNIT
}

/// Box–Muller transform of two uniforms in (0, 1] into two independent
/// standard normal deviates `(cosine branch, sine branch)`.
#[inline]
pub fn box_muller(u1: f64, u2: f64) -> (f64, f64) {
    let radius = (-2.0 * u1.ln()).sqrt();
    let angle = 2.0 * PI * u2;
    (radius * angle.cos(), radius * angle.sin())
}

/// Seedable single-owner random source.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomStream {
    state: u64,
    cached_gaussian: Option<f64>,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            state: seed,
            cached_gaussian: None,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        finalize(self.state)
    }

    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        uniform_from_bits(self.next_u64())
    }

    /// Standard normal deviate. The sine branch of each Box–Muller pair is
    /// cached and returned by the following call.
    pub fn next_standard_gaussian(&mut self) -> f64 {
        if let Some(z) = self.cached_gaussian.take() {
            return z;
        }
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        let (z0, z1) = box_muller(u1, u2);
        self.cached_gaussian = Some(z1);
        z0
    }

    pub fn next_gaussian(&mut self, mean: f64, sd: f64) -> Result<f64> {
        if !(sd >= 0.0) {
            return Err(Error::Config(format!(
                "standard deviation must be non-negative, got {sd}"
            )));
        }
        Ok(mean + sd * self.next_standard_gaussian())
    }
}

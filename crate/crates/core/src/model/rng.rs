//! Deterministic, splittable random streams.
//!
//! A [`Rng`] is a `(seed, stream_id)` pair. Each pair maps to an independent
//! ChaCha8 keystream, so work items that own distinct stream ids can draw in
//! any order (or in parallel) and still reproduce bit for bit.

use num_complex::Complex;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rng {
    pub seed: u64,
    pub stream_id: u64,
}

/// Stream tags, one per independent consumer of random draws.
pub mod streams {
    pub const CHANNEL_PHASE: u64 = 1;
    pub const CSIT_ERROR: u64 = 2;
    pub const CLUTTER: u64 = 3;
    pub const SYMBOLS: u64 = 4;
    pub const RADAR_NOISE: u64 = 5;
    pub const BACKGROUND_NOISE: u64 = 6;
    pub const SWEEP_POINT: u64 = 7;
    pub const IMPAIRMENT: u64 = 8;
    pub const HEATMAP: u64 = 9;
    pub const SENSING_SYMBOLS: u64 = 10;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Rng {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Derive an independent sub-stream. Pure function of `(self, tag)`.
    pub fn child(&self, tag: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(tag.wrapping_add(0x5851_f42d))),
        }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn generator(&self) -> Draws {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(self.stream_id);
        Draws { inner }
    }
}

/// Generator handed out by [`Rng::generator`]. All draws are `f64`; callers
/// convert to their working precision.
pub struct Draws {
    inner: ChaCha8Rng,
}

impl Draws {
    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn phase(&mut self) -> f64 {
        self.uniform() * std::f64::consts::TAU
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Circularly-symmetric complex Gaussian with total variance `var`.
    pub fn complex_normal(&mut self, var: f64) -> Complex<f64> {
        let s = (var / 2.0).sqrt();
        Complex::new(self.normal() * s, self.normal() * s)
    }

    pub fn coin(&mut self) -> bool {
        self.inner.random::<bool>()
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }
}

//! Counter-derived random streams.
//!
//! A [`Stream`] is a ChaCha8 generator keyed by a 64-bit seed with the stream counter set to a
//! caller-chosen index, so replicate `i` of a run always sees the same draws no matter which
//! worker thread evaluates it. The distribution primitives below only consume raw `u64`
//! output, which keeps them identical across platforms and crate upgrades.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TWO_POW_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Clone, Debug)]
pub struct Stream {
    rng: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl Stream {
    pub fn new(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Stream {
            rng,
            spare_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_NEG_53
    }

    /// Uniform integer in `0..bound` (Lemire's nearly-divisionless method, unbiased).
    pub fn below(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "below() needs a positive bound");
        let bound = bound as u64;
        let mut m = (self.next_u64() as u128) * (bound as u128);
        if (m as u64) < bound {
            let threshold = bound.wrapping_neg() % bound;
            while (m as u64) < threshold {
                m = (self.next_u64() as u128) * (bound as u128);
            }
        }
        (m >> 64) as usize
    }

    /// Standard normal by the Marsaglia polar method; the second variate of each accepted
    /// pair is cached for the next call.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * factor);
                return u * factor;
            }
        }
    }

    /// Exponential with rate 1 by inversion.
    pub fn exponential(&mut self) -> f64 {
        -(1.0 - self.uniform()).ln()
    }

    /// Chi-square with one degree of freedom, as a squared standard normal.
    pub fn chi_square1(&mut self) -> f64 {
        let z = self.normal();
        z * z
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = self.normal());
    }
}

/// Factory of independent streams sharing one seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamFactory {
    pub seed: u64,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        StreamFactory { seed }
    }

    pub fn stream(&self, index: u64) -> Stream {
        Stream::new(self.seed, index)
    }
}

/// `count` independent streams for `seed`, indexed `0..count`.
pub fn rng_streams(seed: u64, count: usize) -> Vec<Stream> {
    let factory = StreamFactory::new(seed);
    (0..count as u64).map(|i| factory.stream(i)).collect()
}

/// SplitMix64 finalizer, used to derive child seeds from `(seed, tag)` pairs.
pub fn mix_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

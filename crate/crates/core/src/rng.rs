//! Seeded random streams.
//!
//! Every stochastic component of a run draws from its own stream, addressed by
//! `(seed, stream id)`. Streams are ChaCha8 keystreams, so identical addresses
//! replay bit-exactly and distinct stream ids are independent.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// What a stream is used for inside a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Purpose {
    /// Initial iterate.
    Init = 0,
    /// Internal solver randomness (mutations).
    Search = 1,
    /// Noise of the evaluations a solver requests.
    Noise = 2,
    /// Noise of the portfolio's comparison evaluations.
    Comparison = 3,
    /// Monte Carlo regret estimation.
    Regret = 4,
}

/// A reproducible source of uniform and Gaussian draws.
#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// One standard Gaussian draw.
    pub fn gaussian(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn gaussian_vec(&mut self, d: usize) -> Vec<f64> {
        (0..d).map(|_| self.gaussian()).collect()
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.random::<f64>()
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Addresses the streams of one run: `(base seed, run index)`.
///
/// Stream ids pack `(run, slot, purpose)` so that every solver slot of every
/// repetition has disjoint streams for each purpose.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunSeed {
    pub seed: u64,
    pub run: u64,
}

impl RunSeed {
    pub fn new(seed: u64, run: u64) -> Self {
        Self { seed, run }
    }

    pub fn stream(&self, slot: u32, purpose: Purpose) -> RandomStream {
        let id = (self.run << 32) | ((slot as u64) << 8) | purpose as u64;
        RandomStream::new(self.seed, id)
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::StatsError;

/// Explicit random stream. Every draw advances it; two streams built from
/// the same seed produce the same sequence on every platform.
#[derive(Debug, Clone)]
pub struct Stream(ChaCha8Rng);

impl Stream {
    pub fn from_seed(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.0.sample(StandardNormal)
    }

    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.standard_normal()
    }

    pub fn bernoulli(&mut self, p: f64) -> Result<u8, StatsError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(StatsError::InvalidInput(format!("bernoulli probability {p} outside [0, 1]")));
        }
        // a uniform in [0, 1) is never < 0 and always < 1
        Ok(u8::from(self.0.random::<f64>() < p))
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.0.random_range(0..n)
    }
}

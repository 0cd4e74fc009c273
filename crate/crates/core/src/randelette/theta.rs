//! Coefficients `θ_{n,k}`, generated lazily and reproducibly from a seed.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ThetaSource {
    /// Uniform on `[0, 1)`, keyed by `(seed, n, k)`.
    Seeded(u64),
    /// Every coefficient equal to the given value.
    Constant(f64),
}

/// A point of the coefficient space `Θ`.
///
/// Seeded coefficients come from a counter-based stream: generation `n`
/// selects the ChaCha stream and `k` the word position, so any single
/// `θ_{n,k}` is produced without generating the others.
#[derive(Debug, Clone)]
pub struct ThetaSample {
    source: ThetaSource,
    base: Option<ChaCha8Rng>,
    overrides: BTreeMap<(u32, u64), f64>,
}

impl ThetaSample {
    pub fn seeded(seed: u64) -> Self {
        Self {
            source: ThetaSource::Seeded(seed),
            base: Some(ChaCha8Rng::seed_from_u64(seed)),
            overrides: BTreeMap::new(),
        }
    }

    pub fn constant(value: f64) -> Self {
        Self { source: ThetaSource::Constant(value), base: None, overrides: BTreeMap::new() }
    }

    pub fn zeros() -> Self {
        Self::constant(0.0)
    }

    pub fn source(&self) -> &ThetaSource {
        &self.source
    }

    /// Pin one coefficient, leaving every other one untouched.
    pub fn with_override(mut self, n: u32, k: u64, value: f64) -> Self {
        self.overrides.insert((n, k), value);
        self
    }

    pub fn set(&mut self, n: u32, k: u64, value: f64) {
        self.overrides.insert((n, k), value);
    }

    pub fn get(&self, n: u32, k: u64) -> f64 {
        if let Some(v) = self.overrides.get(&(n, k)) {
            return *v;
        }
        match (&self.source, &self.base) {
            (ThetaSource::Constant(v), _) => *v,
            (ThetaSource::Seeded(_), Some(base)) => {
                let mut rng = base.clone();
                rng.set_stream(n as u64);
                rng.set_word_pos(2 * k as u128);
                rng.random::<f64>()
            }
            (ThetaSource::Seeded(seed), None) => ThetaSample::seeded(*seed).get(n, k),
        }
    }
}

impl PartialEq for ThetaSample {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source && self.overrides == other.overrides
    }
}

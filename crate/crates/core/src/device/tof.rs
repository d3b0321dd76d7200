use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time-of-flight rangefinder model: Gaussian noise plus occasional
/// uniformly distributed outliers, clamped to the sensor range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TofModel {
    pub rate_hz: f64,
    pub noise_sigma_mm: f64,
    pub outlier_prob: f64,
    pub outlier_range_mm: (u32, u32),
    pub min_range_mm: u32,
    pub max_range_mm: u32,
    pub seed: u64,
}

impl Default for TofModel {
    fn default() -> Self {
        Self {
            rate_hz: 30.0,
            noise_sigma_mm: 3.0,
            outlier_prob: 0.01,
            outlier_range_mm: (10, 2000),
            min_range_mm: 10,
            max_range_mm: 2000,
            seed: 0,
        }
    }
}

impl TofModel {
    pub fn noiseless() -> Self {
        Self {
            noise_sigma_mm: 0.0,
            outlier_prob: 0.0,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate_hz > 0.0) || !self.rate_hz.is_finite() {
            return Err(Error::validation("tof rate_hz must be > 0"));
        }
        if !(self.noise_sigma_mm >= 0.0) || !self.noise_sigma_mm.is_finite() {
            return Err(Error::validation("tof noise_sigma_mm must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.outlier_prob) {
            return Err(Error::validation("tof outlier_prob must be in [0, 1]"));
        }
        if self.min_range_mm >= self.max_range_mm {
            return Err(Error::validation(
                "tof min_range_mm must be below max_range_mm",
            ));
        }
        if self.outlier_range_mm.0 > self.outlier_range_mm.1 {
            return Err(Error::validation("tof outlier_range_mm is reversed"));
        }
        Ok(())
    }

    pub fn period_ms(&self) -> f64 {
        1000.0 / self.rate_hz
    }

    pub fn sensor(&self) -> TofSensor {
        TofSensor {
            noise: (self.noise_sigma_mm > 0.0)
                .then(|| Normal::new(0.0, self.noise_sigma_mm).expect("sigma validated")),
            model: self.clone(),
            rng: ChaCha8Rng::seed_from_u64(self.seed),
        }
    }
}

/// A seeded sensor instance producing readings.
#[derive(Debug, Clone)]
pub struct TofSensor {
    model: TofModel,
    noise: Option<Normal<f64>>,
    rng: ChaCha8Rng,
}

impl TofSensor {
    pub fn model(&self) -> &TofModel {
        &self.model
    }

    /// Reading for a target at `true_mm`.
    pub fn read(&mut self, true_mm: f64) -> u32 {
        let m = &self.model;
        let raw = if m.outlier_prob > 0.0 && self.rng.random::<f64>() < m.outlier_prob {
            let (lo, hi) = m.outlier_range_mm;
            self.rng.random_range(lo..=hi) as f64
        } else {
            let noise = self.noise.map_or(0.0, |n| n.sample(&mut self.rng));
            (true_mm + noise).round()
        };
        raw.clamp(m.min_range_mm as f64, m.max_range_mm as f64) as u32
    }
}

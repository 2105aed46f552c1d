//! Seeded synthetic monthly series: linear trend, yearly season and noise.

use std::f64::consts::PI;

use gpfc_core::Frequency;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::dataset::Dataset;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub n_series: usize,
    pub length: usize,
    pub test_len: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_series: 40,
            length: 115,
            test_len: 18,
            seed: 0,
        }
    }
}

/// One monthly series per index, each drawn from its own seeded stream so
/// the set does not depend on `n_series`.
pub fn synthetic_dataset(cfg: &SynthConfig) -> Result<Dataset> {
    let items = (0..cfg.n_series)
        .map(|i| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(1_000_003).wrapping_add(i as u64));
            (
                format!("synth-{i:03}"),
                synthetic_series(&mut rng, cfg.length),
            )
        })
        .collect();
    Dataset::from_values(items, Frequency::Monthly, cfg.test_len)
}

fn synthetic_series(rng: &mut ChaCha8Rng, length: usize) -> Vec<f64> {
    let level = Normal::new(10.0, 3.0).expect("valid normal").sample(rng);
    let slope: f64 = rng.random_range(-0.05..0.05);
    let amplitude: f64 = rng.random_range(0.5..2.0);
    let phase: f64 = rng.random_range(0.0..2.0 * PI);
    let noise: f64 = rng.random_range(0.2..0.6);
    (0..length)
        .map(|t| {
            let t = t as f64;
            let e: f64 = StandardNormal.sample(rng);
            level + slope * t + amplitude * (2.0 * PI * t / 12.0 + phase).sin() + noise * e
        })
        .collect()
}

//! Monte Carlo simulators used to cross-check every analytic stage.
//!
//! All randomness comes from `ChaCha8Rng` seeded from `SimConfig::seed`,
//! with a distinct stream per hot spot or per chunk of drops, so results are
//! reproducible regardless of how work is scheduled.

mod ctmc;
mod distance;
mod mobility;
mod sinr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use ctmc::{simulate_ctmc, CtmcEstimate};
pub use distance::{ks_statistic, sample_disk_distance, simulate_disk_distance};
pub use mobility::{default_mobility_burn_in, simulate_mobility};
pub use sinr::simulate_sinr;

use crate::error::{Result, UdnError};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    /// Steps or events discarded before averaging; `None` picks the oracle's default.
    pub burn_in: Option<u64>,
    /// Steps, drops, events or pairs, depending on the oracle.
    pub samples: u64,
    pub time_step: f64,
}

impl SimConfig {
    pub fn new(seed: u64, samples: u64) -> Self {
        SimConfig { seed, burn_in: None, samples, time_step: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(UdnError::input("samples must be at least 1"));
        }
        if !(self.time_step > 0.0) {
            return Err(UdnError::input("time_step must be positive"));
        }
        Ok(())
    }

    pub(crate) fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
}

impl SimEstimate {
    /// Whether `value` lies within `k` standard errors or `abs_tol`, whichever is looser.
    pub fn agrees_with(&self, value: f64, k: f64, abs_tol: f64) -> bool {
        (self.mean - value).abs() <= (k * self.stderr).max(abs_tol)
    }
}

const BATCHES: usize = 32;

/// Mean and batch-means standard error of a correlated series.
pub(crate) fn batch_means(series: &[f64]) -> SimEstimate {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n.max(1) as f64;
    let size = n / BATCHES;
    if size == 0 {
        return SimEstimate { mean, stderr: f64::INFINITY, n: n as u64 };
    }
    let means: Vec<f64> = series
        .chunks_exact(size)
        .take(BATCHES)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / means.len() as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
    SimEstimate { mean, stderr: (var / means.len() as f64).sqrt(), n: n as u64 }
}

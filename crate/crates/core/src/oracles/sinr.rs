use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use super::distance::disk_distance;
use super::{SimConfig, SimEstimate};
use crate::coverage::RadioParams;
use crate::error::{Result, UdnError};

const CHUNK: u64 = 1 << 14;

/// Fraction of drops with `SINR >= γ0`. Each drop draws the serving and
/// interfering distances from the disk, exponential fading powers with rate
/// `η`, and rounds a fractional interferer count up with probability equal
/// to its fractional part. Noise is `R_s^{-α}/ρ0`, so the SNR is exactly `ρ0`.
pub fn simulate_sinr(rp: &RadioParams, n_int: f64, cfg: &SimConfig) -> Result<SimEstimate> {
    rp.validate()?;
    cfg.validate()?;
    if !(n_int >= 0.0 && n_int.is_finite()) {
        return Err(UdnError::input(format!("n_int must be finite and nonnegative, got {n_int}")));
    }
    let fading = Exp::new(rp.eta).map_err(|e| UdnError::input(format!("bad eta: {e}")))?;
    let base = n_int.floor() as u64;
    let frac = n_int - n_int.floor();
    let chunks = cfg.samples.div_ceil(CHUNK);
    let hits: Vec<u64> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = cfg.rng(k);
            let len = CHUNK.min(cfg.samples - k * CHUNK);
            let mut covered = 0;
            for _ in 0..len {
                let count = base + u64::from(rng.random::<f64>() < frac);
                let rs = disk_distance(&mut rng, rp.l_i);
                let signal_path = rs.powf(-rp.alpha_p);
                let mut interference = 0.0;
                for _ in 0..count {
                    let ri = disk_distance(&mut rng, rp.l_i);
                    interference += fading.sample(&mut rng) * ri.powf(-rp.alpha_p);
                }
                let signal = fading.sample(&mut rng) * signal_path;
                if signal >= rp.gamma0 * (signal_path / rp.rho0 + interference) {
                    covered += 1;
                }
            }
            covered
        })
        .collect();
    let n = cfg.samples as f64;
    let p = hits.iter().sum::<u64>() as f64 / n;
    Ok(SimEstimate { mean: p, stderr: (p * (1.0 - p) / n).sqrt(), n: cfg.samples })
}

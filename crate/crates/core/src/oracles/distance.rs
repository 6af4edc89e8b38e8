use rand::Rng;
use rayon::prelude::*;

use super::{SimConfig, SimEstimate};
use crate::error::{Result, UdnError};

const CHUNK: u64 = 1 << 16;

pub(crate) fn uniform_in_disk<R: Rng>(rng: &mut R, l: f64) -> (f64, f64) {
    let r = l * rng.random::<f64>().sqrt();
    let t = std::f64::consts::TAU * rng.random::<f64>();
    (r * t.cos(), r * t.sin())
}

/// One draw of the distance between two uniform points in a disk of radius `l`.
pub(crate) fn disk_distance<R: Rng>(rng: &mut R, l: f64) -> f64 {
    let (ax, ay) = uniform_in_disk(rng, l);
    let (bx, by) = uniform_in_disk(rng, l);
    (ax - bx).hypot(ay - by)
}

/// `n` distances drawn in fixed chunks, each with its own stream.
pub fn sample_disk_distance(l: f64, cfg: &SimConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if !(l > 0.0) {
        return Err(UdnError::input(format!("disk radius must be positive, got {l}")));
    }
    let chunks = cfg.samples.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = cfg.rng(k);
            let len = CHUNK.min(cfg.samples - k * CHUNK);
            (0..len).map(|_| disk_distance(&mut rng, l)).collect()
        })
        .collect();
    Ok(parts.concat())
}

pub fn simulate_disk_distance(l: f64, cfg: &SimConfig) -> Result<SimEstimate> {
    let xs = sample_disk_distance(l, cfg)?;
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(SimEstimate { mean, stderr: (var / n).sqrt(), n: xs.len() as u64 })
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::{disk_distance_cdf, disk_distance_mean};

    #[test]
    fn mean_matches_closed_form() {
        let est = simulate_disk_distance(1.0, &SimConfig::new(1, 2_000_000)).unwrap();
        assert!(est.agrees_with(disk_distance_mean(1.0), 4.0, 0.0), "{est:?}");
    }

    #[test]
    fn samples_stay_within_the_diameter() {
        let xs = sample_disk_distance(2.5, &SimConfig::new(2, 100_000)).unwrap();
        assert!(xs.iter().all(|&x| (0.0..=5.0).contains(&x)));
    }

    #[test]
    fn empirical_cdf_matches_density() {
        let xs = sample_disk_distance(1.0, &SimConfig::new(3, 1_000_000)).unwrap();
        assert!(ks_statistic(xs, |x| disk_distance_cdf(x, 1.0)) < 0.005);
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = SimConfig::new(11, 200_000);
        assert_eq!(simulate_disk_distance(1.0, &cfg).unwrap(), simulate_disk_distance(1.0, &cfg).unwrap());
    }

    #[test]
    fn stderr_shrinks_like_root_n() {
        let mut last = None;
        for n in [100_000u64, 200_000, 400_000, 800_000] {
            let s = simulate_disk_distance(1.0, &SimConfig::new(5, n)).unwrap().stderr;
            if let Some(prev) = last {
                let ratio: f64 = prev / s;
                assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.2, "ratio {ratio}");
            }
            last = Some(s);
        }
    }
}

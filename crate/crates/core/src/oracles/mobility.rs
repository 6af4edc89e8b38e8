use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use super::{batch_means, SimConfig, SimEstimate};
use crate::error::{Result, UdnError};
use crate::mobility::{MobilityConfig, TransferMatrix};

/// Ten relaxation times of the network, `10 ⌈1 / (ζ (1 - ρ(R)))⌉` steps.
pub fn default_mobility_burn_in(zeta: f64, tm: &TransferMatrix) -> u64 {
    let gap = (1.0 - tm.spectral_radius()).max(1e-6);
    10 * (1.0 / (zeta * gap)).ceil() as u64
}

fn binomial<R: Rng>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial").sample(rng)
}

/// Agent-level simulation: each step every user leaves with probability ζ,
/// picks a destination by the rows of `R` (or exits with `d_i`), and
/// Poisson(`a_i`) new users arrive. Returns time-averaged populations.
pub fn simulate_mobility(
    spots: &MobilityConfig,
    tm: &TransferMatrix,
    a: &[f64],
    cfg: &SimConfig,
) -> Result<Vec<SimEstimate>> {
    spots.validate()?;
    cfg.validate()?;
    let n = tm.len();
    if a.len() != n || spots.len() != n {
        return Err(UdnError::input("arrival vector, spots and transfer matrix disagree in size"));
    }
    let zeta = spots.zeta;
    let arrivals: Vec<Option<Poisson<f64>>> = a
        .iter()
        .map(|&x| {
            if x > 0.0 {
                Poisson::new(x).map(Some).map_err(|e| UdnError::input(format!("bad arrival rate {x}: {e}")))
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;
    let burn_in = cfg.burn_in.unwrap_or_else(|| default_mobility_burn_in(zeta, tm));
    let mut rng = cfg.rng(0);
    let mut pop = vec![0u64; n];
    let mut incoming = vec![0u64; n];
    let mut series: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.samples as usize); n];
    for step in 0..burn_in + cfg.samples {
        incoming.iter_mut().for_each(|x| *x = 0);
        for i in 0..n {
            let mut movers = binomial(&mut rng, pop[i], zeta);
            pop[i] -= movers;
            let mut remaining_mass = 1.0;
            for j in 0..n {
                if movers == 0 {
                    break;
                }
                let r = tm.r[(i, j)];
                if r <= 0.0 {
                    continue;
                }
                let k = binomial(&mut rng, movers, (r / remaining_mass).min(1.0));
                incoming[j] += k;
                movers -= k;
                remaining_mass -= r;
            }
            // Whatever is left exits the system.
        }
        for i in 0..n {
            pop[i] += incoming[i];
            if let Some(p) = &arrivals[i] {
                pop[i] += p.sample(&mut rng) as u64;
            }
        }
        if step >= burn_in {
            for i in 0..n {
                series[i].push(pop[i] as f64);
            }
        }
    }
    Ok(series.iter().map(|s| batch_means(s)).collect())
}

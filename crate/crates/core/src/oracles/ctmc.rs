use rand::Rng;
use serde::Serialize;

use super::{batch_means, SimConfig, SimEstimate};
use crate::access::{state_count, state_index, ChannelParams};
use crate::error::{Result, UdnError};

pub const DEFAULT_CTMC_BURN_IN: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CtmcEstimate {
    /// Time-weighted occupancy in `state_index` order.
    pub pi: Vec<f64>,
    /// Fraction of arrivals that found every available channel busy.
    pub p_block: SimEstimate,
    /// Time fraction spent in blocking states.
    pub p_block_time: f64,
    pub p_idle: SimEstimate,
    pub n_oc: SimEstimate,
}

impl CtmcEstimate {
    pub fn total_variation(&self, pi: &[f64]) -> f64 {
        0.5 * self.pi.iter().zip(pi).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}

/// Event-driven simulation of the access chain; `samples` counts events
/// after burn-in. Arrivals occur at rate `λ` in every state and are blocked
/// when `v_m = v_n`.
pub fn simulate_ctmc(cp: &ChannelParams, cfg: &SimConfig) -> Result<CtmcEstimate> {
    cp.validate()?;
    cfg.validate()?;
    if !(cp.eps_s > 0.0 && cp.eps_s < 1.0) {
        return Err(UdnError::input("the simulated chain needs eps_s strictly inside (0, 1)"));
    }
    let c = cp.c;
    let (lambda, mu, alpha, beta) = (cp.lambda_is, cp.mu_s, cp.alpha(), cp.beta());
    let burn_in = cfg.burn_in.unwrap_or(DEFAULT_CTMC_BURN_IN);
    let mut rng = cfg.rng(0);
    let (mut vm, mut vn) = (0usize, c);
    let mut occupancy = vec![0.0; state_count(c)];
    let mut total_time = 0.0;
    let (mut arrivals, mut blocked) = (0u64, 0u64);
    // Per-batch series for standard errors, weighted by holding time.
    let batch_len = (cfg.samples / 32).max(1);
    let mut block_seen = Vec::new();
    let mut idle_series = Vec::new();
    let mut busy_series = Vec::new();
    let (mut b_arr, mut b_blk, mut b_time, mut b_idle, mut b_busy) = (0u64, 0u64, 0.0, 0.0, 0.0);
    for event in 0..burn_in + cfg.samples {
        let up = (c - vn) as f64 * alpha;
        let down = if vn > vm { vn as f64 * beta } else { 0.0 };
        let done = vm as f64 * mu;
        let total = lambda + up + down + done;
        let hold = -(1.0 - rng.random::<f64>()).ln() / total;
        let recording = event >= burn_in;
        if recording {
            occupancy[state_index(vm, vn)] += hold;
            total_time += hold;
            b_time += hold;
            if vm == 0 {
                b_idle += hold;
            }
            b_busy += vm as f64 * hold;
        }
        let u = rng.random::<f64>() * total;
        if u < lambda {
            if recording {
                arrivals += 1;
                b_arr += 1;
            }
            if vm == vn {
                if recording {
                    blocked += 1;
                    b_blk += 1;
                }
            } else {
                vm += 1;
            }
        } else if u < lambda + done {
            vm -= 1;
        } else if u < lambda + done + up {
            vn += 1;
        } else {
            vn -= 1;
        }
        if recording && (event - burn_in + 1) % batch_len == 0 {
            block_seen.push(if b_arr > 0 { b_blk as f64 / b_arr as f64 } else { 0.0 });
            idle_series.push(b_idle / b_time);
            busy_series.push(b_busy / b_time);
            (b_arr, b_blk, b_time, b_idle, b_busy) = (0, 0, 0.0, 0.0, 0.0);
        }
    }
    occupancy.iter_mut().for_each(|p| *p /= total_time);
    let p_block_time: f64 = (0..=c).map(|v| occupancy[state_index(v, v)]).sum();
    let p_idle: f64 = (0..=c).map(|v| occupancy[state_index(0, v)]).sum();
    let n_oc: f64 = (0..=c)
        .flat_map(|n| (0..=n).map(move |m| (m, n)))
        .map(|(m, n)| m as f64 * occupancy[state_index(m, n)])
        .sum();
    let with_mean = |series: &[f64], mean: f64| SimEstimate { mean, ..batch_means(series) };
    let seen = if arrivals > 0 { blocked as f64 / arrivals as f64 } else { 0.0 };
    Ok(CtmcEstimate {
        p_block: with_mean(&block_seen, seen),
        p_block_time,
        p_idle: with_mean(&idle_series, p_idle),
        n_oc: with_mean(&busy_series, n_oc),
        pi: occupancy,
    })
}

//! Throughput, power, energy and energy efficiency; SBS deployment plans.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::access::AccessDistribution;
use crate::coverage::CoverageSolution;
use crate::error::{Result, UdnError};
use crate::quadrature::GaussLegendre;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerParams {
    pub p_t: f64,
    pub eta_pa: f64,
    pub p_rf: f64,
    pub p_bb: f64,
    pub sigma_dc: f64,
    pub sigma_ms: f64,
    pub p_st: f64,
    /// Operation duration in seconds.
    pub t_to: f64,
}

impl Default for PowerParams {
    fn default() -> Self {
        PowerParams {
            p_t: 1.6,
            eta_pa: 8.0,
            p_rf: 0.7,
            p_bb: 1.6,
            sigma_dc: 0.08,
            sigma_ms: 0.1,
            p_st: 6.8,
            t_to: 1.0,
        }
    }
}

impl PowerParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("p_t", self.p_t), ("p_rf", self.p_rf), ("p_bb", self.p_bb), ("p_st", self.p_st)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(UdnError::input(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if !(self.eta_pa > 0.0) {
            return Err(UdnError::input(format!("eta_pa must be positive, got {}", self.eta_pa)));
        }
        for (name, v) in [("sigma_dc", self.sigma_dc), ("sigma_ms", self.sigma_ms)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(UdnError::input(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if !(self.t_to > 0.0 && self.t_to.is_finite()) {
            return Err(UdnError::input(format!("t_to must be positive, got {}", self.t_to)));
        }
        Ok(())
    }

    /// Watts drawn per occupied channel.
    pub fn load_slope(&self) -> f64 {
        (self.p_t / self.eta_pa + self.p_rf + self.p_bb) / ((1.0 - self.sigma_dc) * (1.0 - self.sigma_ms))
    }
}

/// Power of one SBS with `n_oc` occupied channels (a mean is allowed).
pub fn sbs_power(n_oc: f64, pp: &PowerParams) -> f64 {
    n_oc * pp.load_slope() + pp.p_st
}

const TAIL_CUTOFF: f64 = 1e-6;
const SINR_CAP: f64 = 1e4;
const OCTAVE_ORDER: usize = 10;

/// `∫_{γ0}^∞ log2(1+x) f(x) dx` written through the SINR tail.
///
/// Octave panels `[2^k, 2^{k+1}]` are fixed so tail evaluations are shared
/// across thresholds.
pub fn capacity_from_tail<F>(mut tail: F, gamma0: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(gamma0 > 0.0 && gamma0.is_finite()) {
        return Err(UdnError::input(format!("gamma0 must be positive, got {gamma0}")));
    }
    let t0 = tail(gamma0)?;
    let head = (1.0 + gamma0).log2() * t0;
    if t0 < TAIL_CUTOFF || gamma0 >= SINR_CAP {
        return Ok(head);
    }
    let rule = GaussLegendre::cached(OCTAVE_ORDER);
    let panel = |tail: &mut F, a: f64, b: f64| -> Result<f64> {
        let mut acc = 0.0;
        for (u, w) in rule.mapped(a.ln(), b.ln()) {
            let x = u.exp();
            acc += w * tail(x)? * x / (1.0 + x);
        }
        Ok(acc)
    };
    let mut start = 2f64.powi(gamma0.log2().ceil() as i32);
    if start <= gamma0 {
        start *= 2.0;
    }
    let mut integral = panel(&mut tail, gamma0, start.min(SINR_CAP))?;
    while start < SINR_CAP {
        if tail(start)? < TAIL_CUTOFF {
            break;
        }
        let end = (2.0 * start).min(SINR_CAP);
        integral += panel(&mut tail, start, end)?;
        start = end;
    }
    Ok(head + integral / LN_2)
}

/// Per-channel capacity at the solution's own threshold.
pub fn capacity_per_channel(sol: &CoverageSolution) -> Result<f64> {
    capacity_from_tail(|x| sol.tail(x), sol.gamma0)
}

pub fn sbs_throughput(cap: f64, acc: &AccessDistribution) -> f64 {
    cap * acc.n_oc_mean
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpotMetrics {
    pub id: usize,
    pub n_sbs: usize,
    pub p_cover: f64,
    pub n_cover: f64,
    pub n_int: f64,
    pub p_block: f64,
    pub p_idle: f64,
    pub n_oc_mean: f64,
    pub capacity: f64,
    pub t_s: f64,
    pub t_hs: f64,
    /// Mean power drawn while not idle, times `1 - P_idle`.
    pub power: f64,
    pub e_to: f64,
    pub e_hs: f64,
    /// `None` when the SBS never carries traffic.
    pub ee_s: Option<f64>,
    pub ee_hs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemMetrics {
    pub t_qn: f64,
    pub e_qn: f64,
    pub ee_qn: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub spots: Vec<SpotMetrics>,
    pub system: SystemMetrics,
}

pub fn spot_metrics(
    id: usize,
    n_sbs: usize,
    capacity: f64,
    cov: &CoverageSolution,
    acc: &AccessDistribution,
    pp: &PowerParams,
) -> SpotMetrics {
    let t_s = sbs_throughput(capacity, acc);
    let power = sbs_power(acc.n_oc_mean, pp) * acc.p_busy;
    let e_to = power * pp.t_to;
    let ee_s = (power > 0.0).then(|| t_s * pp.t_to / e_to);
    let n = n_sbs as f64;
    let ee_hs = (power > 0.0).then(|| (n * t_s * pp.t_to) / (n * e_to));
    SpotMetrics {
        id,
        n_sbs,
        p_cover: cov.p_cover,
        n_cover: cov.n_cover,
        n_int: cov.n_int,
        p_block: acc.p_block,
        p_idle: acc.p_idle,
        n_oc_mean: acc.n_oc_mean,
        capacity,
        t_s,
        t_hs: n * t_s,
        power,
        e_to,
        e_hs: n * e_to,
        ee_s,
        ee_hs,
    }
}

pub fn system_metrics(spots: &[SpotMetrics], pp: &PowerParams) -> Result<SystemMetrics> {
    let t_qn: f64 = spots.iter().map(|s| s.t_hs).sum();
    let e_qn: f64 = spots.iter().map(|s| s.e_hs).sum();
    if !(e_qn > 0.0) {
        return Err(UdnError::Degenerate(
            "every hot spot is idle, so network energy efficiency is undefined".into(),
        ));
    }
    Ok(SystemMetrics { t_qn, e_qn, ee_qn: t_qn * pp.t_to / e_qn })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeploymentStrategy {
    Uds,
    Rds,
    Explicit(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeploymentPlan {
    pub strategy: DeploymentStrategy,
    pub total_sbs: usize,
    pub per_spot: Vec<usize>,
    pub theta: Option<Vec<f64>>,
}

pub fn make_deployment(strategy: DeploymentStrategy, total_sbs: usize, pop: &[f64]) -> Result<DeploymentPlan> {
    let n = pop.len();
    if n == 0 {
        return Err(UdnError::input("deployment needs at least one hot spot"));
    }
    if total_sbs < n {
        return Err(UdnError::input(format!(
            "total_sbs ({total_sbs}) is smaller than the number of hot spots ({n})"
        )));
    }
    let per_spot = match &strategy {
        DeploymentStrategy::Rds => equal_split(total_sbs, n),
        DeploymentStrategy::Uds => proportional_split(total_sbs, pop),
        DeploymentStrategy::Explicit(v) => {
            if v.len() != n {
                return Err(UdnError::input(format!(
                    "explicit deployment has {} entries for {n} hot spots",
                    v.len()
                )));
            }
            if v.iter().sum::<usize>() != total_sbs {
                return Err(UdnError::input("explicit deployment does not sum to total_sbs"));
            }
            if v.contains(&0) {
                return Err(UdnError::input("explicit deployment leaves a hot spot without SBSs"));
            }
            v.clone()
        }
    };
    Ok(DeploymentPlan { strategy, total_sbs, per_spot, theta: None })
}

fn equal_split(total: usize, n: usize) -> Vec<usize> {
    (0..n).map(|i| total / n + usize::from(i < total % n)).collect()
}

/// Largest-remainder apportionment with at least one SBS per spot.
fn proportional_split(total: usize, pop: &[f64]) -> Vec<usize> {
    let mass: f64 = pop.iter().map(|p| p.max(0.0)).sum();
    if !(mass > 0.0) {
        return equal_split(total, pop.len());
    }
    let quotas: Vec<f64> = pop.iter().map(|p| total as f64 * p.max(0.0) / mass).collect();
    let mut out: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = out.iter().sum();
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        out[i] += 1;
    }
    while let Some(empty) = out.iter().position(|&v| v == 0) {
        let donor = (0..out.len())
            .max_by(|&a, &b| out[a].cmp(&out[b]).then(b.cmp(&a)))
            .expect("non-empty");
        out[donor] -= 1;
        out[empty] = 1;
    }
    out
}

/// `N_S(i) = max(1, round(P̄_i / θ_i))`.
pub fn theta_deployment(pop: &[f64], theta: &[f64]) -> Result<DeploymentPlan> {
    if pop.len() != theta.len() {
        return Err(UdnError::input("theta list length does not match the number of hot spots"));
    }
    if let Some(t) = theta.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(UdnError::input(format!("theta must be positive, got {t}")));
    }
    let per_spot: Vec<usize> = pop
        .iter()
        .zip(theta)
        .map(|(p, t)| ((p / t).round() as usize).max(1))
        .collect();
    let total_sbs = per_spot.iter().sum();
    Ok(DeploymentPlan {
        strategy: DeploymentStrategy::Explicit(per_spot.clone()),
        total_sbs,
        per_spot,
        theta: Some(theta.to_vec()),
    })
}

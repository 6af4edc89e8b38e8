//! Two-dimensional channel chain of one SBS: `v_m` busy channels out of
//! `v_n` available ones, `0 <= v_m <= v_n <= C`.
//!
//! Generator: arrivals `λ` while `v_m < v_n`; completions `v_m μ`; a channel
//! turns available at `(C - v_n) α` and unavailable at `v_n β` unless all
//! available channels are busy. `β = 1` and `α = (1 - ε)/ε`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, UdnError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub c: usize,
    pub p_s: f64,
    pub mu_s: f64,
    pub lambda_is: f64,
    pub eps_s: f64,
    /// `1 - eps_s`, carried separately so tiny availabilities survive.
    pub avail_s: f64,
}

/// Channel unavailability `ε_s` with its complement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unavailability {
    pub eps: f64,
    pub avail: f64,
}

impl Unavailability {
    pub fn from_eps(eps: f64) -> Self {
        Unavailability { eps, avail: 1.0 - eps }
    }

    pub fn from_avail(avail: f64) -> Self {
        Unavailability { eps: 1.0 - avail, avail }
    }
}

impl ChannelParams {
    pub fn new(c: usize, p_s: f64, mu_s: f64, lambda_is: f64, eps_s: f64) -> Self {
        ChannelParams { c, p_s, mu_s, lambda_is, eps_s, avail_s: 1.0 - eps_s }
    }

    pub fn with_unavailability(&self, u: Unavailability) -> Self {
        ChannelParams { eps_s: u.eps, avail_s: u.avail, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c == 0 {
            return Err(UdnError::input("channel count C must be at least 1"));
        }
        if !(self.p_s > 0.0 && self.p_s < 1.0) {
            return Err(UdnError::input(format!("p_s must lie in (0, 1), got {}", self.p_s)));
        }
        if !(self.mu_s > 0.0 && self.mu_s.is_finite()) {
            return Err(UdnError::input(format!("mu_s must be positive, got {}", self.mu_s)));
        }
        if !(self.lambda_is >= 0.0 && self.lambda_is.is_finite()) {
            return Err(UdnError::input(format!(
                "call rate must be finite and nonnegative, got {}",
                self.lambda_is
            )));
        }
        if !(0.0..=1.0).contains(&self.eps_s) || !(0.0..=1.0).contains(&self.avail_s) {
            return Err(UdnError::input(format!("eps_s must lie in [0, 1], got {}", self.eps_s)));
        }
        if (self.eps_s + self.avail_s - 1.0).abs() > 1e-12 {
            return Err(UdnError::input("eps_s and its complement do not add up to 1"));
        }
        Ok(())
    }

    /// Rate at which an unavailable channel turns available (`β = 1`).
    pub fn alpha(&self) -> f64 {
        self.avail_s / self.eps_s
    }

    pub fn beta(&self) -> f64 {
        1.0
    }

    /// Every transition `(from, to, rate)` with a positive rate.
    pub fn transitions(&self) -> Vec<((usize, usize), (usize, usize), f64)> {
        let c = self.c;
        let (alpha, beta) = (self.alpha(), self.beta());
        let mut out = Vec::new();
        for vn in 0..=c {
            for vm in 0..=vn {
                let mut push = |to: (usize, usize), rate: f64| {
                    if rate > 0.0 && rate.is_finite() {
                        out.push(((vm, vn), to, rate));
                    }
                };
                if vm < vn {
                    push((vm + 1, vn), self.lambda_is);
                }
                if vm > 0 {
                    push((vm - 1, vn), vm as f64 * self.mu_s);
                }
                if vn < c {
                    push((vm, vn + 1), (c - vn) as f64 * alpha);
                }
                if vn > vm {
                    push((vm, vn - 1), vn as f64 * beta);
                }
            }
        }
        out
    }
}

/// Index of `(v_m, v_n)` in the triangular layout.
pub fn state_index(vm: usize, vn: usize) -> usize {
    vn * (vn + 1) / 2 + vm
}

pub fn state_count(c: usize) -> usize {
    (c + 1) * (c + 2) / 2
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccessDistribution {
    pub c: usize,
    /// Probabilities in `state_index` order.
    pub pi: Vec<f64>,
    pub p_block: f64,
    pub p_idle: f64,
    /// `1 - p_idle`, summed directly so it keeps precision when tiny.
    pub p_busy: f64,
    pub p_oc: f64,
    pub n_oc_mean: f64,
}

impl AccessDistribution {
    pub fn prob(&self, vm: usize, vn: usize) -> f64 {
        if vm > vn || vn > self.c {
            return 0.0;
        }
        self.pi[state_index(vm, vn)]
    }

    pub fn states(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        (0..=self.c)
            .flat_map(|vn| (0..=vn).map(move |vm| (vm, vn)))
            .map(|(vm, vn)| ((vm, vn), self.pi[state_index(vm, vn)]))
    }

    pub fn p_serve(&self) -> f64 {
        1.0 - self.p_block
    }

    fn from_pi(c: usize, pi: Vec<f64>) -> Self {
        let mut d = AccessDistribution {
            c,
            pi,
            p_block: 0.0,
            p_idle: 0.0,
            p_busy: 0.0,
            p_oc: 0.0,
            n_oc_mean: 0.0,
        };
        let (mut block, mut idle, mut active, mut busy) = (0.0, 0.0, 0.0, 0.0);
        for ((vm, vn), p) in d.states() {
            if vm == vn {
                block += p;
            }
            if vm == 0 {
                idle += p;
            } else {
                active += p;
            }
            busy += vm as f64 * p;
        }
        d.p_block = block.clamp(0.0, 1.0);
        d.p_idle = idle.clamp(0.0, 1.0);
        d.p_busy = active.clamp(0.0, 1.0);
        d.n_oc_mean = busy.clamp(0.0, c as f64);
        d.p_oc = d.n_oc_mean / c as f64;
        d
    }
}

/// Call arrival rate offered to one SBS.
pub fn call_rate(pop: f64, p_s: f64, n_cover: f64, n_sbs: usize) -> Result<f64> {
    if n_sbs == 0 {
        return Err(UdnError::input("n_sbs must be at least 1"));
    }
    if !(pop >= 0.0 && p_s >= 0.0 && n_cover >= 0.0) {
        return Err(UdnError::input("call-rate inputs must be nonnegative"));
    }
    Ok(pop * p_s * n_cover / n_sbs as f64)
}

fn ln_choose(n: usize, k: usize) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `Binom(n, p)` weights for real `n`, mixing `⌊n⌋` and `⌈n⌉` by the fractional part.
pub fn binomial_mixture(n: f64, p: f64) -> Vec<f64> {
    let lo = n.floor() as usize;
    let frac = n - n.floor();
    let mut out = vec![0.0; lo + 2];
    let mut add = |m: usize, share: f64| {
        if share == 0.0 {
            return;
        }
        for (k, slot) in out.iter_mut().enumerate().take(m + 1) {
            let v = if p == 0.0 {
                if k == 0 { 1.0 } else { 0.0 }
            } else if p == 1.0 {
                if k == m { 1.0 } else { 0.0 }
            } else {
                (ln_choose(m, k) + k as f64 * p.ln() + (m - k) as f64 * (-p).ln_1p()).exp()
            };
            *slot += share * v;
        }
    };
    add(lo, 1.0 - frac);
    add(lo + 1, frac);
    out
}

/// Channel unavailability: the binomial sum over active interferers with a
/// constant uncovered probability `1 - P_cover`.
pub fn epsilon_s(p_cover: f64, n_int: f64, p_oc: f64) -> Result<Unavailability> {
    check_probability(p_cover, "p_cover")?;
    check_probability(p_oc, "p_oc")?;
    if !(n_int >= 0.0 && n_int.is_finite()) {
        return Err(UdnError::input(format!("n_int must be finite and nonnegative, got {n_int}")));
    }
    let w = binomial_mixture(n_int, p_oc);
    let eps: f64 = w.iter().map(|w| (1.0 - p_cover) * w).sum();
    let avail: f64 = w.iter().map(|w| p_cover * w).sum();
    Ok(Unavailability { eps: eps.clamp(0.0, 1.0), avail: avail.clamp(0.0, 1.0) })
}

/// Variant where the uncovered probability depends on the number `Δ` of active interferers.
pub fn epsilon_conditional<F>(n_int: f64, p_oc: f64, mut cover_with: F) -> Result<Unavailability>
where
    F: FnMut(usize) -> Result<f64>,
{
    check_probability(p_oc, "p_oc")?;
    if !(n_int >= 0.0 && n_int.is_finite()) {
        return Err(UdnError::input(format!("n_int must be finite and nonnegative, got {n_int}")));
    }
    let (mut eps, mut avail) = (0.0, 0.0);
    for (delta, w) in binomial_mixture(n_int, p_oc).into_iter().enumerate() {
        if w > 0.0 {
            let p = cover_with(delta)?;
            eps += (1.0 - p) * w;
            avail += p * w;
        }
    }
    Ok(Unavailability { eps: eps.clamp(0.0, 1.0), avail: avail.clamp(0.0, 1.0) })
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(UdnError::input(format!("{what} must lie in [0, 1], got {p}")))
    }
}

pub fn stationary_pi(cp: &ChannelParams) -> Result<AccessDistribution> {
    cp.validate()?;
    let c = cp.c;
    let mut pi = vec![0.0; state_count(c)];
    if cp.avail_s == 0.0 {
        // No channel is ever available.
        pi[state_index(0, 0)] = 1.0;
        return Ok(AccessDistribution::from_pi(c, pi));
    }
    let load = cp.lambda_is / cp.mu_s;
    let ln_load = load.ln();
    let term_m = |vm: usize| {
        if vm == 0 {
            0.0
        } else if load == 0.0 {
            f64::NEG_INFINITY
        } else {
            vm as f64 * ln_load - ln_factorial(vm)
        }
    };
    let mut logw = vec![f64::NEG_INFINITY; pi.len()];
    if cp.eps_s == 0.0 {
        // Every channel always available: Erlang loss on C channels.
        for vm in 0..=c {
            logw[state_index(vm, c)] = term_m(vm);
        }
    } else {
        let ln_ratio = cp.avail_s.ln() - cp.eps_s.ln();
        for vn in 0..=c {
            let term_n = ln_choose(c, vn) + vn as f64 * ln_ratio;
            for vm in 0..=vn {
                logw[state_index(vm, vn)] = term_m(vm) + term_n;
            }
        }
    }
    let top = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (p, lw) in pi.iter_mut().zip(&logw) {
        *p = (lw - top).exp();
        total += *p;
    }
    if !(total.is_finite() && total > 0.0) {
        return Err(UdnError::numeric("access chain weights could not be normalized"));
    }
    pi.iter_mut().for_each(|p| *p /= total);
    Ok(AccessDistribution::from_pi(c, pi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EpsilonMode {
    #[default]
    Literal,
    Conditional,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccessSolution {
    pub dist: AccessDistribution,
    pub eps_s: Unavailability,
    /// Updates after the first evaluation of `ε_s`.
    pub iterations: usize,
}

const ACCESS_TOL: f64 = 1e-8;
const ACCESS_MAX_ITER: usize = 500;

/// Iterates `p_oc -> ε_s -> π -> p_oc` from `p_oc = 0`.
pub fn access_fixed_point<F>(template: &ChannelParams, mut eps_of: F) -> Result<AccessSolution>
where
    F: FnMut(f64) -> Result<Unavailability>,
{
    let mut p_oc = 0.0;
    let mut history = Vec::new();
    for k in 1..=ACCESS_MAX_ITER {
        let eps_s = eps_of(p_oc)?;
        let dist = stationary_pi(&template.with_unavailability(eps_s))?;
        let next = dist.p_oc;
        history.push(next);
        if (next - p_oc).abs() < ACCESS_TOL {
            return Ok(AccessSolution { dist, eps_s, iterations: k - 1 });
        }
        p_oc = next;
    }
    let keep = history.len().saturating_sub(10);
    Err(UdnError::FixedPoint { iterations: ACCESS_MAX_ITER, history: history.split_off(keep) })
}

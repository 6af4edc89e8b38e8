//! Self-consistent coverage probability of a hot spot.
//!
//! A typical user is covered when `1/SINR = Z <= 1/γ0`; the CDF of `Z` is
//! recovered from its Laplace transform, and the number of interfering
//! SBSs depends on the coverage probability itself.

mod disk;
mod euler;
mod kernel;
mod transform;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use disk::{disk_distance_cdf, disk_distance_mean, disk_distance_pdf};
pub use euler::{euler_invert_cdf, EulerParams, Inversion};
pub use kernel::{log_ratio_density, InterferenceKernel};
pub use transform::TransformEngine;

use crate::error::{Result, UdnError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    pub alpha_p: f64,
    /// Received SNR, treated as a constant.
    pub rho0: f64,
    /// Rate of the exponential fading power.
    pub eta: f64,
    pub gamma0: f64,
    /// Hot-spot radius in km.
    pub l_i: f64,
    pub n_sbs: usize,
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str, v: f64| {
            if ok {
                Ok(())
            } else {
                Err(UdnError::input(format!("{what} out of range: {v}")))
            }
        };
        check(self.alpha_p > 2.0 && self.alpha_p.is_finite(), "alpha_p (must exceed 2)", self.alpha_p)?;
        check(self.rho0 > 0.0 && self.rho0.is_finite(), "rho0", self.rho0)?;
        check(self.eta > 0.0 && self.eta.is_finite(), "eta", self.eta)?;
        check(self.gamma0 > 0.0 && self.gamma0.is_finite(), "gamma0", self.gamma0)?;
        check(self.l_i > 0.0 && self.l_i.is_finite(), "l_i", self.l_i)?;
        if self.n_sbs == 0 {
            return Err(UdnError::input("n_sbs must be at least 1"));
        }
        Ok(())
    }

    fn engine(&self, ep: &EulerParams) -> Arc<TransformEngine> {
        TransformEngine::shared(self.alpha_p, self.rho0, self.eta, ep)
    }
}

/// Laplace transform of `Z` at `s` with `n_int` interferers.
pub fn laplace_z(s: Complex64, n_int: f64, rp: &RadioParams, ep: &EulerParams) -> Result<Complex64> {
    rp.validate()?;
    ep.validate()?;
    rp.engine(ep).laplace_z(s, n_int)
}

/// `Pr(SINR >= x)` with `n_int` interferers.
pub fn sinr_tail(x: f64, n_int: f64, rp: &RadioParams, ep: &EulerParams) -> Result<Inversion> {
    rp.validate()?;
    ep.validate()?;
    tail_with(&rp.engine(ep), x, n_int, ep)
}

fn tail_with(engine: &TransformEngine, x: f64, n_int: f64, ep: &EulerParams) -> Result<Inversion> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(UdnError::input(format!("SINR threshold must be positive, got {x}")));
    }
    euler_invert_cdf(|s| engine.laplace_z(s, n_int), 1.0 / x, ep)
}

#[derive(Debug, Clone)]
pub struct CoverageSolution {
    pub p_cover: f64,
    pub n_cover: f64,
    pub n_int: f64,
    pub iterations: usize,
    /// `|F(P) - P|` at the accepted iterate.
    pub residual: f64,
    /// Unclamped inversion value behind `p_cover`.
    pub raw: f64,
    pub gamma0: f64,
    engine: Arc<TransformEngine>,
    ep: EulerParams,
}

impl CoverageSolution {
    /// `Pr(SINR >= x)` with the interferer count frozen at the solution.
    pub fn tail(&self, x: f64) -> Result<f64> {
        Ok(tail_with(&self.engine, x, self.n_int, &self.ep)?.value)
    }

    pub fn n_sbs(&self) -> f64 {
        self.n_cover + self.n_int
    }
}

/// Solves `P = Pr(Z <= 1/γ0)` with `n_int = N_S (1 - P)`.
pub fn coverage_fixed_point(rp: &RadioParams, ep: &EulerParams) -> Result<CoverageSolution> {
    rp.validate()?;
    ep.validate()?;
    let engine = rp.engine(ep);
    let n = rp.n_sbs as f64;
    let f = |p: f64| tail_with(&engine, rp.gamma0, n * (1.0 - p), ep);
    let mut p = 0.5;
    let mut history = Vec::new();
    for iterations in 1..=ep.max_iter {
        let fp = f(p)?;
        history.push(fp.value);
        let residual = (fp.value - p).abs();
        if residual < ep.fp_tol {
            // Returning F(P) rather than P removes the bias damping leaves when F(P) is near 0.
            log::debug!(
                "coverage fixed point: gamma0={} n_sbs={} P={} after {iterations} iterations",
                rp.gamma0,
                rp.n_sbs,
                fp.value
            );
            let (n_cover, n_int) = (n * fp.value, n * (1.0 - fp.value));
            return Ok(solution(fp, n_cover, n_int, rp, ep, engine, iterations, residual));
        }
        p = (1.0 - ep.damping) * p + ep.damping * fp.value;
    }
    let keep = history.len().saturating_sub(10);
    Err(UdnError::FixedPoint { iterations: ep.max_iter, history: history.split_off(keep) })
}

/// Coverage with a caller-chosen interferer count, bypassing the fixed point.
pub fn coverage_with_interferers(
    rp: &RadioParams,
    ep: &EulerParams,
    n_int: f64,
) -> Result<CoverageSolution> {
    rp.validate()?;
    ep.validate()?;
    let n = rp.n_sbs as f64;
    if !(n_int >= 0.0 && n_int <= n) {
        return Err(UdnError::input(format!("forced n_int must lie in [0, {n}], got {n_int}")));
    }
    let engine = rp.engine(ep);
    let inv = tail_with(&engine, rp.gamma0, n_int, ep)?;
    Ok(solution(inv, n - n_int, n_int, rp, ep, engine, 0, 0.0))
}

#[allow(clippy::too_many_arguments)]
fn solution(
    inv: Inversion,
    n_cover: f64,
    n_int: f64,
    rp: &RadioParams,
    ep: &EulerParams,
    engine: Arc<TransformEngine>,
    iterations: usize,
    residual: f64,
) -> CoverageSolution {
    CoverageSolution {
        p_cover: inv.value,
        n_cover,
        n_int,
        iterations,
        residual,
        raw: inv.raw,
        gamma0: rp.gamma0,
        engine,
        ep: ep.clone(),
    }
}

/// Mean number of covering SBSs that can also serve the call.
pub fn avg_available_sbs(sol: &CoverageSolution, p_serve: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_serve) {
        return Err(UdnError::input(format!("p_serve must lie in [0, 1], got {p_serve}")));
    }
    Ok(sol.n_cover * p_serve)
}

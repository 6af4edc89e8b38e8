//! Euler-summation inversion of a Laplace transform into a CDF value.

use std::f64::consts::{LN_10, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, UdnError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EulerParams {
    pub a: f64,
    pub b: u32,
    pub c: u32,
    /// Gauss-Legendre nodes per panel of the log-ratio kernel.
    pub kernel_order: usize,
    /// Gauss-Legendre nodes per panel of the fading-gain integral.
    pub gain_order: usize,
    /// Finest refinement level tried for the fading-gain integral.
    pub max_level: u32,
    pub fp_tol: f64,
    pub damping: f64,
    pub max_iter: usize,
}

impl Default for EulerParams {
    fn default() -> Self {
        EulerParams {
            a: 8.0 * LN_10,
            b: 11,
            c: 14,
            kernel_order: 8,
            gain_order: 8,
            max_level: 5,
            fp_tol: 1e-5,
            damping: 0.5,
            max_iter: 200,
        }
    }
}

impl EulerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(UdnError::input(format!("Euler A must be positive, got {}", self.a)));
        }
        if self.b == 0 || self.c == 0 {
            return Err(UdnError::input("Euler B and C must be positive integers"));
        }
        if self.kernel_order == 0 || self.gain_order == 0 {
            return Err(UdnError::input("quadrature orders must be positive"));
        }
        if !(self.fp_tol > 0.0) {
            return Err(UdnError::input("fixed-point tolerance must be positive"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(UdnError::input(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        if self.max_iter == 0 {
            return Err(UdnError::input("max_iter must be positive"));
        }
        Ok(())
    }

    /// Abscissae `(A + 2πci) / (2t)` for `c = 0..=C+B`.
    pub fn abscissae(&self, t: f64) -> Vec<Complex64> {
        (0..=(self.c + self.b))
            .map(|k| Complex64::new(self.a, 2.0 * PI * k as f64) / (2.0 * t))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inversion {
    /// Value clamped to `[0, 1]`.
    pub value: f64,
    pub raw: f64,
}

/// CDF at `t` of a nonnegative variable whose density has transform `transform`.
pub fn euler_invert_cdf<F>(mut transform: F, t: f64, ep: &EulerParams) -> Result<Inversion>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    if !(t > 0.0 && t.is_finite()) {
        return Err(UdnError::input(format!("inversion point must be positive, got {t}")));
    }
    let mut partial = Vec::with_capacity((ep.c + ep.b + 1) as usize);
    let mut sum = 0.0;
    for (k, s) in ep.abscissae(t).into_iter().enumerate() {
        let l = transform(s)?;
        let term = (l / s).re;
        if !term.is_finite() {
            return Err(UdnError::numeric(format!("transform is not finite at s = {s}")));
        }
        let d = if k == 0 { 2.0 } else { 1.0 };
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * term / d;
        partial.push(sum);
    }
    let mut acc = 0.0;
    let mut binom = 1.0;
    for bk in 0..=ep.b {
        acc += binom * partial[(ep.c + bk) as usize];
        binom = binom * f64::from(ep.b - bk) / f64::from(bk + 1);
    }
    let raw = acc * (ep.a / 2.0).exp() / t / 2f64.powi(ep.b as i32);
    if !raw.is_finite() {
        return Err(UdnError::numeric("Euler summation produced a non-finite value"));
    }
    Ok(Inversion { value: raw.clamp(0.0, 1.0), raw })
}

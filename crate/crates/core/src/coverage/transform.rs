//! Laplace transform of the normalized interference-plus-noise functional
//! `Z = 1/(ρ0 G_s) + Σ G_i (R_s/R_i)^α / G_s`.
//!
//! The fading-gain integral runs along the ray `G = r e^{iψ}` with
//! `ψ = arg(s)/2`, which damps the oscillation of both exponentials; it is
//! integrated in `x = ln r` over panels sized to the local decay rate.
//! Tables of weights and log-kernel values depend only on `s`, so they are
//! cached and reused for every interferer count.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use super::euler::EulerParams;
use super::kernel::InterferenceKernel;
use crate::error::{Result, UdnError};
use crate::quadrature::GaussLegendre;

/// Log-magnitude drop at which the integrand is truncated.
const TRUNCATION: f64 = 36.0;
const TABLE_CACHE_LIMIT: usize = 4096;

#[derive(Debug)]
struct Level {
    base: Vec<Complex64>,
    log_inner: Vec<Complex64>,
}

impl Level {
    fn eval(&self, n_int: f64) -> Complex64 {
        if n_int == 0.0 {
            return self.base.iter().sum();
        }
        self.base
            .iter()
            .zip(&self.log_inner)
            .map(|(b, li)| b * (n_int * li).exp())
            .sum()
    }
}

#[derive(Debug, Default)]
struct Table {
    levels: Vec<Arc<Level>>,
    negligible: bool,
}

type Key = (u64, u64);

#[derive(Debug)]
pub struct TransformEngine {
    alpha: f64,
    rho0: f64,
    eta: f64,
    gain_order: usize,
    max_level: u32,
    kernel: InterferenceKernel,
    tables: Mutex<HashMap<Key, Arc<Mutex<Table>>>>,
}

impl TransformEngine {
    pub fn new(alpha: f64, rho0: f64, eta: f64, ep: &EulerParams) -> Self {
        TransformEngine {
            alpha,
            rho0,
            eta,
            gain_order: ep.gain_order,
            max_level: ep.max_level,
            kernel: InterferenceKernel::new(alpha, eta, ep.kernel_order),
            tables: Mutex::new(HashMap::new()),
        }
    }

    /// Engine shared by every caller with the same channel constants.
    pub fn shared(alpha: f64, rho0: f64, eta: f64, ep: &EulerParams) -> Arc<Self> {
        type Registry = Mutex<HashMap<(u64, u64, u64, usize, usize, u32), Arc<TransformEngine>>>;
        static ENGINES: OnceLock<Registry> = OnceLock::new();
        let key = (
            alpha.to_bits(),
            rho0.to_bits(),
            eta.to_bits(),
            ep.kernel_order,
            ep.gain_order,
            ep.max_level,
        );
        let mut map = ENGINES
            .get_or_init(|| Mutex::new(HashMap::new()))
            .lock()
            .expect("engine registry poisoned");
        map.entry(key)
            .or_insert_with(|| Arc::new(TransformEngine::new(alpha, rho0, eta, ep)))
            .clone()
    }

    pub fn kernel(&self) -> &InterferenceKernel {
        &self.kernel
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `E[exp(-s Z)]` with `n_int` interferers (real, principal-branch power).
    pub fn laplace_z(&self, s: Complex64, n_int: f64) -> Result<Complex64> {
        if !(n_int >= 0.0 && n_int.is_finite()) {
            return Err(UdnError::input(format!("n_int must be finite and nonnegative, got {n_int}")));
        }
        if !(s.re >= 0.0 && s.is_finite()) {
            return Err(UdnError::input(format!("transform argument must satisfy Re(s) >= 0, got {s}")));
        }
        if s == Complex64::new(0.0, 0.0) {
            return Ok(Complex64::new(1.0, 0.0));
        }
        let table = self.table(s);
        let mut table = table.lock().expect("transform table poisoned");
        if table.negligible {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let mut prev: Option<Complex64> = None;
        for level in 0..=self.max_level {
            let lvl = match table.levels.get(level as usize) {
                Some(l) => l.clone(),
                None => {
                    let built = match self.build_level(s, level)? {
                        Some(l) => Arc::new(l),
                        None => {
                            table.negligible = true;
                            return Ok(Complex64::new(0.0, 0.0));
                        }
                    };
                    table.levels.push(built.clone());
                    built
                }
            };
            let value = lvl.eval(n_int);
            if !value.is_finite() {
                return Err(UdnError::numeric(format!("transform is not finite at s = {s}")));
            }
            if let Some(p) = prev {
                let diff = (value - p).norm();
                if diff <= 1e-8 * value.norm() || diff <= 1e-13 {
                    return Ok(value);
                }
            }
            prev = Some(value);
        }
        let last = table.levels.len();
        let a = table.levels[last - 2].eval(n_int);
        let b = table.levels[last - 1].eval(n_int);
        Err(UdnError::numeric(format!(
            "fading-gain quadrature did not converge at s = {s}, n_int = {n_int}: last estimates {a} and {b}"
        )))
    }

    fn table(&self, s: Complex64) -> Arc<Mutex<Table>> {
        let key = (s.re.to_bits(), s.im.to_bits());
        let mut map = self.tables.lock().expect("transform cache poisoned");
        if map.len() >= TABLE_CACHE_LIMIT && !map.contains_key(&key) {
            map.clear();
        }
        map.entry(key).or_default().clone()
    }

    /// Quadrature table at refinement `level`; `None` when the transform is
    /// below double precision everywhere.
    fn build_level(&self, s: Complex64, level: u32) -> Result<Option<Level>> {
        let (eta, rho0) = (self.eta, self.rho0);
        let psi = 0.5 * s.arg();
        let rot = Complex64::from_polar(1.0, psi);
        let s_rot = s * rot.conj();
        let cos = psi.cos();
        let a = s.norm() * cos / rho0;
        let b = eta * cos;
        let peak = 2.0 * (a * b).sqrt();
        if peak > 700.0 {
            return Ok(None);
        }
        let c = peak + TRUNCATION;
        let disc = (c * c - 4.0 * a * b).max(0.0).sqrt();
        let r_lo = (2.0 * a / (c + disc)).max(1e-15 / eta);
        let r_hi = (c + disc) / (2.0 * b);
        let scale = 0.5f64.powi(level as i32);
        let h0 = 0.5 * scale;
        let kappa = 2.0 * scale;
        let norm_s = s.norm();
        let rate = |x: f64| {
            let r = x.exp();
            (norm_s / (rho0 * r)).max(eta * r)
        };
        let rule = GaussLegendre::cached(self.gain_order);
        let (x_lo, x_hi) = (r_lo.ln(), r_hi.ln());
        let mut base = Vec::new();
        let mut log_inner = Vec::new();
        let mut x = x_lo;
        while x < x_hi {
            let mut w = h0.min(kappa / rate(x));
            while w * rate(x + w) > kappa * 1.0001 {
                w *= 0.5;
            }
            let end = (x + w).min(x_hi);
            for (xn, wn) in rule.mapped(x, end) {
                let r = xn.exp();
                let g = rot * r;
                let weight = wn * eta * g * (-s_rot / (rho0 * r) - eta * g).exp();
                let inner = self.kernel.inner(s_rot / r);
                if !(inner.re > 0.0) {
                    return Err(UdnError::numeric(format!(
                        "interference kernel left the right half-plane at s = {s} (value {inner})"
                    )));
                }
                base.push(weight);
                log_inner.push(inner.ln());
            }
            x = end;
        }
        Ok(Some(Level { base, log_inner }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::composite;
    use approx::assert_abs_diff_eq;

    fn engine() -> TransformEngine {
        TransformEngine::new(4.0, 100.0, 1.0, &EulerParams::default())
    }

    /// `K_1(z)` from `∫_0^∞ e^{-z cosh u} cosh u du`.
    fn bessel_k1(z: f64) -> f64 {
        composite(0.0, 12.0, 600, 16, |u| (-z * u.cosh()).exp() * u.cosh())
    }

    /// Independent route: brute-force real-axis quadrature of the noise-only transform.
    fn noise_only_brute(s: f64, rho0: f64, eta: f64) -> f64 {
        composite(-40.0, 5.0, 4000, 16, |x| {
            let g = x.exp();
            eta * (-s / (rho0 * g) - eta * g).exp() * g
        })
    }

    #[test]
    fn origin_maps_to_one() {
        let e = engine();
        assert_eq!(e.laplace_z(Complex64::new(0.0, 0.0), 3.0).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn noise_only_matches_bessel_form() {
        let e = engine();
        for s in [0.01, 1.0, 9.2, 50.0, 400.0] {
            let v = e.laplace_z(Complex64::new(s, 0.0), 0.0).unwrap();
            let z = 2.0 * (s / 100.0f64).sqrt();
            let closed = z * bessel_k1(z);
            let brute = noise_only_brute(s, 100.0, 1.0);
            assert_abs_diff_eq!(closed, brute, epsilon = 1e-10);
            assert!((v.re - closed).abs() < 1e-8 * closed.max(1e-300) + 1e-14, "s={s}: {} vs {closed}", v.re);
            assert!(v.im.abs() < 1e-10 * v.re.abs().max(1e-300));
        }
    }

    #[test]
    fn real_argument_gives_real_positive_value() {
        let e = engine();
        for n in [0.0, 1.0, 2.5, 9.0] {
            let v = e.laplace_z(Complex64::new(12.0, 0.0), n).unwrap();
            assert!(v.re > 0.0);
            assert!(v.im.abs() < 1e-10 * v.re);
        }
    }

    #[test]
    fn integer_interferers_match_real_axis_quadrature() {
        // Independent route: real-axis quadrature with the kernel evaluated directly.
        let e = engine();
        let s = Complex64::new(9.0, 0.0);
        for n in [1.0, 3.0] {
            let slow = composite(-30.0, 5.0, 3000, 16, |x| {
                let g = x.exp();
                let inner = e.kernel().inner(s / g).re;
                g * (-s.re / (100.0 * g) - g).exp() * inner.powf(n)
            });
            let fast = e.laplace_z(s, n).unwrap();
            assert_abs_diff_eq!(fast.re, slow, epsilon = 1e-10);
        }
    }

    #[test]
    fn modulus_is_bounded_on_euler_abscissae() {
        let e = engine();
        let ep = EulerParams::default();
        for t in [0.2, 1.0] {
            for s in ep.abscissae(t) {
                for n in [0.0, 0.5, 4.0] {
                    let v = e.laplace_z(s, n).unwrap();
                    assert!(v.norm() <= 1.0 + 1e-10, "s={s} n={n}: {v}");
                }
            }
        }
    }

    #[test]
    fn rotated_contour_matches_real_axis_for_complex_argument() {
        let e = engine();
        let s = Complex64::new(9.0, 40.0);
        let slow_re = composite(-30.0, 5.0, 20000, 16, |x| {
            let g = x.exp();
            let v = g * (-s / (100.0 * g) - g).exp() * e.kernel().inner(s / g).powf(2.0);
            v.re
        });
        let fast = e.laplace_z(s, 2.0).unwrap();
        assert_abs_diff_eq!(fast.re, slow_re, epsilon = 1e-9);
    }

    #[test]
    fn invalid_arguments_are_rejected() {
        let e = engine();
        assert!(e.laplace_z(Complex64::new(-1.0, 0.0), 0.0).is_err());
        assert!(e.laplace_z(Complex64::new(1.0, 0.0), -1.0).is_err());
    }
}

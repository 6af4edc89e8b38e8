//! Open Jackson network: traffic equations and stationary hot-spot populations.
//!
//! Rates are row vectors, `λ = a (I - R)^{-1}`, so the solver works on the
//! transposed system `(I - R)^T λ^T = a^T`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, UdnError};
use crate::mobility::TransferMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryState {
    /// Arrival rates per slot.
    pub lambda: Vec<f64>,
    /// Stationary populations.
    pub pop: Vec<f64>,
    /// Utilizations `λ_i / (ζ P̄_i)`.
    pub rho: Vec<f64>,
}

impl StationaryState {
    /// Largest relative residual of `ζ P² - λ P - λ = 0` over spots.
    pub fn quadratic_residual(&self, zeta: f64) -> f64 {
        self.lambda
            .iter()
            .zip(&self.pop)
            .map(|(&l, &p)| {
                let scale = (zeta * p * p).max(l * p).max(l).max(f64::MIN_POSITIVE);
                (zeta * p * p - l * p - l).abs() / scale
            })
            .fold(0.0, f64::max)
    }
}

const MIN_RCOND: f64 = 1e-12;

pub fn solve_traffic(tm: &TransferMatrix, a: &[f64]) -> Result<Vec<f64>> {
    let n = tm.len();
    if a.len() != n {
        return Err(UdnError::input(format!(
            "external rate vector has length {}, expected {n}",
            a.len()
        )));
    }
    if a.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(UdnError::input("external rates must be finite and nonnegative"));
    }
    let system: DMatrix<f64> = (DMatrix::identity(n, n) - &tm.r).transpose();
    let lu = system.clone().lu();
    let inverse = lu.try_inverse().ok_or_else(|| {
        UdnError::numeric("traffic equations are singular: I - R is not invertible")
    })?;
    let rcond = 1.0 / (one_norm(&system) * one_norm(&inverse));
    if !(rcond > MIN_RCOND) {
        return Err(UdnError::numeric(format!(
            "traffic equations are near-singular (condition estimate {:.3e})",
            1.0 / rcond
        )));
    }
    let rhs = DVector::from_column_slice(a);
    let lu = system.clone().lu();
    let mut x = lu
        .solve(&rhs)
        .ok_or_else(|| UdnError::numeric("LU solve of the traffic equations failed"))?;
    // One step of iterative refinement.
    let r = &rhs - &system * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    let residual = (&rhs - &system * &x).norm();
    let scale = rhs.norm().max(x.norm()).max(f64::MIN_POSITIVE);
    if residual > 1e-10 * scale {
        return Err(UdnError::numeric(format!(
            "traffic solve residual {residual:.3e} exceeds tolerance (scale {scale:.3e})"
        )));
    }
    Ok(x.iter().map(|v| v.max(0.0)).collect())
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Positive root of `ζ P² - λ P - λ = 0`.
pub fn stationary_population(lambda: f64, zeta: f64) -> f64 {
    let half = lambda / (2.0 * zeta);
    (half * half + lambda / zeta).sqrt() + half
}

pub fn stationary_state(tm: &TransferMatrix, a: &[f64], zeta: f64) -> Result<StationaryState> {
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(UdnError::input(format!("zeta must lie in (0, 1), got {zeta}")));
    }
    let lambda = solve_traffic(tm, a)?;
    let pop: Vec<f64> = lambda.iter().map(|&l| stationary_population(l, zeta)).collect();
    let rho: Vec<f64> = lambda
        .iter()
        .zip(&pop)
        .map(|(&l, &p)| if p > 0.0 { l / (zeta * p) } else { 0.0 })
        .collect();
    if let Some(i) = rho.iter().position(|&r| !(0.0..1.0).contains(&r)) {
        return Err(UdnError::ModelViolation(format!(
            "hot spot {} has utilization {} outside [0, 1)",
            i + 1,
            rho[i]
        )));
    }
    let state = StationaryState { lambda, pop, rho };
    let residual = state.quadratic_residual(zeta);
    if residual >= 1e-9 {
        return Err(UdnError::numeric(format!(
            "population quadratic residual {residual:.3e} exceeds 1e-9"
        )));
    }
    Ok(state)
}

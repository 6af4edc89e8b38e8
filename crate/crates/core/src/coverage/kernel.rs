//! Interference kernel `E[η / (η + w (R_s/R_i)^α)]` over independent disk distances.
//!
//! With `Y = ln(R_s / R_i)` the expectation is one-dimensional. `Y` is
//! symmetric and its law does not depend on the disk radius, so one table
//! serves every hot spot.

use num_complex::Complex64;

use super::disk::disk_distance_pdf;
use crate::quadrature::GaussLegendre;

/// Upper end of the tabulated `|Y|` range; `Pr(|Y| > 14)` is below 1e-12.
const Y_MAX: f64 = 14.0;
const R_ORDER: usize = 96;

#[derive(Debug, Clone)]
pub struct InterferenceKernel {
    eta: f64,
    /// `(e^{-α y}, weight)` for `y > 0`; each weight covers `±y`.
    nodes: Vec<(f64, f64)>,
    raw_mass: f64,
}

/// Density of `ln(R_s / R_i)`.
pub fn log_ratio_density(y: f64) -> f64 {
    let y = y.abs();
    let e = y.exp();
    let top = 2.0 / e;
    let rule = GaussLegendre::cached(R_ORDER);
    let half = 0.5 * top;
    let mut sum = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let r = half * (1.0 + x);
        sum += w * disk_distance_pdf(e * r, 1.0) * disk_distance_pdf(r, 1.0) * r;
    }
    sum * half * e
}

fn y_breaks() -> Vec<f64> {
    let mut b = vec![0.0];
    let mut x = 1.0 / 64.0;
    while x < 0.5 {
        b.push(x);
        x *= 2.0;
    }
    let mut x = 0.5;
    while x <= Y_MAX + 1e-12 {
        b.push(x);
        x += 0.5;
    }
    b
}

impl InterferenceKernel {
    pub fn new(alpha: f64, eta: f64, y_order: usize) -> Self {
        let rule = GaussLegendre::cached(y_order);
        let breaks = y_breaks();
        let mut nodes = Vec::with_capacity(breaks.len() * y_order);
        for pair in breaks.windows(2) {
            for (y, w) in rule.mapped(pair[0], pair[1]) {
                let d = log_ratio_density(y);
                nodes.push(((-alpha * y).exp(), 2.0 * w * d));
            }
        }
        let raw_mass: f64 = nodes.iter().map(|n| n.1).sum();
        for n in &mut nodes {
            n.1 /= raw_mass;
        }
        InterferenceKernel { eta, nodes, raw_mass }
    }

    /// Total probability captured by the table before renormalization.
    pub fn raw_mass(&self) -> f64 {
        self.raw_mass
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `E[η / (η + w e^{αY})]`.
    pub fn inner(&self, w: Complex64) -> Complex64 {
        let eta = self.eta;
        let mut acc = Complex64::new(0.0, 0.0);
        for &(down, weight) in &self.nodes {
            // Large e^{αy} is divided through to avoid overflow.
            let big = (eta * down) / (eta * down + w);
            let small = eta / (eta + w * down);
            acc += weight * 0.5 * (big + small);
        }
        acc
    }
}

/// Tensor-product quadrature nodes for a disk distance with `l = 1`, graded
/// toward both ends of `[0, 2]`; test-only independent route.
#[cfg(test)]
pub(crate) fn distance_nodes() -> Vec<(f64, f64)> {
    let mut breaks: Vec<f64> = (1..=40).rev().map(|k| 0.5f64.powi(k)).collect();
    breaks.insert(0, 0.0);
    let mut x = 0.5;
    while x < 1.9 {
        x += 0.05;
        breaks.push(x);
    }
    for k in 4..=20 {
        breaks.push(2.0 - 0.5f64.powi(k));
    }
    breaks.push(2.0);
    let rule = GaussLegendre::new(20);
    let mut pts = Vec::new();
    for pair in breaks.windows(2) {
        for (r, w) in rule.mapped(pair[0], pair[1]) {
            pts.push((r, w * disk_distance_pdf(r, 1.0)));
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::composite;
    use approx::assert_abs_diff_eq;

    /// Independent route: tensor quadrature over both distances, radius `l`.
    fn tensor_inner(w: Complex64, alpha: f64, eta: f64, l: f64) -> Complex64 {
        let pts: Vec<(f64, f64)> = distance_nodes().into_iter().map(|(r, wt)| (r * l, wt)).collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for &(rs, ws) in &pts {
            for &(ri, wi) in &pts {
                let u = (rs / ri).powf(alpha);
                acc += ws * wi * eta / (eta + w * u);
            }
        }
        acc
    }

    #[test]
    fn log_ratio_density_is_normalized_and_symmetric() {
        let mass = 2.0 * composite(0.0, Y_MAX, 448, 16, log_ratio_density);
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-9);
        assert_eq!(log_ratio_density(0.7), log_ratio_density(-0.7));
    }

    #[test]
    fn table_mass_is_close_to_one() {
        let k = InterferenceKernel::new(4.0, 1.0, 8);
        assert_abs_diff_eq!(k.raw_mass(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn inner_at_zero_is_one() {
        let k = InterferenceKernel::new(4.0, 1.0, 8);
        assert_abs_diff_eq!(k.inner(Complex64::new(0.0, 0.0)).re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn kernel_matches_tensor_quadrature() {
        let cases = [
            (4.0, 1.0, Complex64::new(1.0, 0.0)),
            (4.0, 1.0, Complex64::new(0.2, 0.15)),
            (4.0, 2.0, Complex64::new(30.0, -20.0)),
            (3.0, 1.0, Complex64::new(5.0, 4.0)),
            (4.0, 1.0, Complex64::new(1e-3, 1e-3)),
        ];
        let k4 = InterferenceKernel::new(4.0, 1.0, 8);
        for (alpha, eta, w) in cases {
            let kernel = if alpha == 4.0 && eta == 1.0 {
                k4.clone()
            } else {
                InterferenceKernel::new(alpha, eta, 8)
            };
            let fast = kernel.inner(w);
            let slow = tensor_inner(w, alpha, eta, 1.0);
            assert!((fast - slow).norm() < 1e-8, "w={w}: {fast} vs {slow}");
        }
    }

    #[test]
    fn kernel_is_radius_free() {
        let w = Complex64::new(0.7, 0.3);
        let a = tensor_inner(w, 4.0, 1.0, 1.0);
        let b = tensor_inner(w, 4.0, 1.0, 2.5);
        assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn real_part_stays_positive_in_right_half_plane() {
        let k = InterferenceKernel::new(4.0, 1.0, 8);
        for re in [0.0, 0.1, 1.0, 10.0, 1e4] {
            for im in [-1e4, -10.0, -1.0, 0.0, 1.0, 10.0, 1e4] {
                let v = k.inner(Complex64::new(re, im));
                assert!(v.re > 0.0 && v.norm() <= 1.0 + 1e-12, "{re}+{im}i -> {v}");
            }
        }
    }
}

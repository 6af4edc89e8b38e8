//! Distance between two independent uniform points in a disk.

use std::f64::consts::PI;

/// Density of the distance between two uniform points in a disk of radius `l`.
pub fn disk_distance_pdf(x: f64, l: f64) -> f64 {
    if !(x > 0.0 && x < 2.0 * l) {
        return 0.0;
    }
    let u = x / (2.0 * l);
    4.0 * x / (PI * l * l) * (u.acos() - u * (1.0 - u * u).sqrt())
}

pub fn disk_distance_cdf(x: f64, l: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 2.0 * l {
        return 1.0;
    }
    let s = x / l;
    let root = (4.0 - s * s).sqrt();
    let v = (8.0 * s * s * (s / 2.0).acos() + 8.0 * (s / 2.0).asin() - s * (2.0 + s * s) * root)
        / (4.0 * PI);
    v.clamp(0.0, 1.0)
}

/// Closed-form mean, `128 l / (45 π)`.
pub fn disk_distance_mean(l: f64) -> f64 {
    128.0 * l / (45.0 * PI)
}

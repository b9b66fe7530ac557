//! Closed-form distribution identities used when averaging over Rayleigh
//! fading and uniform phases.

use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// `E[x²/y]` for a correlated pair of unit-power Rayleigh variables whose
/// correlation is `rho = E[x²y²] − 1`.
///
/// The identity is only used for `rho` in [0, 1], which covers every pair
/// produced by summing independent complex Gaussians.
pub fn rayleigh_ratio_moment(rho: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(invalid(format!("correlation {rho} outside [0, 1]")));
    }
    Ok(PI.sqrt() / 2.0 * (2.0 - rho))
}

/// Density of the sum of two independent U(0, 2π) angles.
pub fn uniform_sum_pdf(z: f64) -> f64 {
    let norm = 4.0 * PI * PI;
    if (0.0..2.0 * PI).contains(&z) {
        z / norm
    } else if (2.0 * PI..=4.0 * PI).contains(&z) {
        (4.0 * PI - z) / norm
    } else {
        0.0
    }
}

/// Density of the difference of two independent U(0, 2π) angles.
pub fn uniform_diff_pdf(z: f64) -> f64 {
    let norm = 4.0 * PI * PI;
    if (-2.0 * PI..0.0).contains(&z) {
        (2.0 * PI + z) / norm
    } else if (0.0..=2.0 * PI).contains(&z) {
        (2.0 * PI - z) / norm
    } else {
        0.0
    }
}

/// Rate of `min(x, y)` for independent exponentials with the given rates.
pub fn min_exponential_rate(rate1: f64, rate2: f64) -> Result<f64> {
    if !(rate1 > 0.0 && rate2 > 0.0) {
        return Err(invalid(format!("exponential rates must be positive, got ({rate1}, {rate2})")));
    }
    Ok(rate1 + rate2)
}

//! Geodesic distance on the sphere and Hamming distance on sign vectors.

use crate::error::{param_err, Result};
use crate::sampling::{dot, norm2};

/// Geodesic distance `arccos <x, x'>` between unit vectors, in `[0, pi]`.
///
/// The inner product is clamped to `[-1, 1]` so that rounding like
/// `1 + 1e-16` cannot produce NaN at distance zero.
pub fn geodesic_distance(x: &[f64], x_prime: &[f64]) -> Result<f64> {
    if x.len() != x_prime.len() {
        return param_err("geodesic distance needs equal-length vectors");
    }
    for (label, v) in [("x", x), ("x'", x_prime)] {
        let l2 = norm2(v);
        if (l2 - 1.0).abs() > 1e-8 {
            return param_err(format!("{label} must be unit norm, got {l2}"));
        }
    }
    Ok(dot(x, x_prime).clamp(-1.0, 1.0).acos())
}

/// Number of disagreeing coordinates between two sign vectors.
pub fn hamming_distance(y: &[i8], y_prime: &[i8]) -> Result<usize> {
    if y.len() != y_prime.len() {
        return param_err(format!(
            "hamming distance needs equal lengths, got {} and {}",
            y.len(),
            y_prime.len()
        ));
    }
    Ok(y.iter().zip(y_prime).filter(|(a, b)| a != b).count())
}

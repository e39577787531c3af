//! Support functions and Monte Carlo width estimation.

use serde::Serialize;

use crate::error::{param_err, Result};
use crate::sampling::{gaussian_vector, RngSpec};

/// Support of the exact sparse set: the l2 norm of the `s`
/// largest-magnitude entries of `g`.
pub fn support_sparse_exact(g: &[f64], s: usize) -> Result<f64> {
    if s == 0 || s > g.len() {
        return param_err(format!("need 1 <= s <= n, got s={s}, n={}", g.len()));
    }
    let mut squares: Vec<f64> = g.iter().map(|x| x * x).collect();
    squares.sort_by(|a, b| b.total_cmp(a));
    Ok(squares[..s].iter().sum::<f64>().sqrt())
}

/// Monte Carlo width estimate of an origin-symmetric set from its support
/// function.
#[derive(Debug, Clone, Serialize)]
pub struct MeanWidthEstimate {
    pub w_hat: f64,
    pub std_err: f64,
    pub n_samples: usize,
    pub set_tag: String,
}

/// Estimate `E sup_{x in K} <g, x>` by averaging the support oracle over
/// `samples` Gaussian draws.
///
/// For the origin-symmetric sets shipped here the width of the difference
/// body `K - K` is exactly twice this value; we report the single-supremum
/// normalization, under which the unit ball at dimension `n` measures
/// `E||g||_2` (compare [`expected_gaussian_norm`]).
pub fn mean_width_mc(
    support_oracle: impl Fn(&[f64]) -> f64,
    n: usize,
    samples: usize,
    rng: RngSpec,
    set_tag: impl Into<String>,
) -> Result<MeanWidthEstimate> {
    if samples == 0 {
        return param_err("mean width estimation needs at least one sample");
    }
    if n == 0 {
        return param_err("dimension must be positive");
    }
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for j in 0..samples {
        let g = gaussian_vector(rng.derive(j as u64), n);
        let h = support_oracle(&g);
        let delta = h - mean;
        mean += delta / (j + 1) as f64;
        m2 += delta * (h - mean);
    }
    let var = if samples > 1 {
        m2 / (samples - 1) as f64
    } else {
        0.0
    };
    Ok(MeanWidthEstimate {
        w_hat: mean,
        std_err: (var / samples as f64).sqrt(),
        n_samples: samples,
        set_tag: set_tag.into(),
    })
}

/// Exact `E ||g||_2` for a standard Gaussian vector in dimension `n`:
/// `sqrt(2) Gamma((n+1)/2) / Gamma(n/2)`.
pub fn expected_gaussian_norm(n: usize) -> f64 {
    assert!(n >= 1);
    let half = n as f64 / 2.0;
    std::f64::consts::SQRT_2
        * (statrs::function::gamma::ln_gamma(half + 0.5) - statrs::function::gamma::ln_gamma(half))
            .exp()
}

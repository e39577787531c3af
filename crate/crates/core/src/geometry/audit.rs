//! Empirical audits of the two embedding properties of the sign map: the
//! hyperplane-tessellation comparison of geodesic and Hamming distance, and
//! the l1 almost-isometry of a Gaussian matrix.

use serde::Serialize;

use crate::error::{param_err, Result};
use crate::geometry::metric::geodesic_distance;
use crate::sampling::{dot, norm2, salt, GaussianRows, RngSpec};

/// Result of a tessellation audit over sampled point pairs.
#[derive(Debug, Clone, Serialize)]
pub struct TessellationAudit {
    /// Max over pairs of `| d_G/pi - d_H/m |`.
    pub max_abs_deviation: f64,
    pub pair_count: usize,
    pub m: usize,
    pub delta_target: f64,
}

/// Compare normalized geodesic and Hamming distances under one streamed
/// Gaussian matrix.
///
/// `sampler` must yield unit-norm members of the signal set. Half the pairs
/// are independent draws; the other half are perturbations at scale
/// `delta_target` within the support of the base point, which is where the
/// comparison is tightest.
pub fn tessellation_audit(
    sampler: impl Fn(RngSpec) -> Result<Vec<f64>>,
    n: usize,
    m: usize,
    pair_count: usize,
    delta_target: f64,
    rng: RngSpec,
) -> Result<TessellationAudit> {
    if m == 0 || pair_count == 0 || n == 0 {
        return param_err("tessellation audit needs n, m, pair_count >= 1");
    }
    let points_rng = rng.derive(salt::POINTS);
    let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(pair_count);
    for j in 0..pair_count {
        let x = sampler(points_rng.derive(2 * j as u64))?;
        if x.len() != n {
            return param_err(format!("sampler produced dimension {}, expected {n}", x.len()));
        }
        let x_prime = if j % 2 == 0 {
            sampler(points_rng.derive(2 * j as u64 + 1))?
        } else {
            perturb_on_support(&x, delta_target, points_rng.derive(2 * j as u64 + 1))
        };
        pairs.push((x, x_prime));
    }

    let mut mismatches = vec![0usize; pair_count];
    let mut rows = GaussianRows::new(rng.derive(salt::ROWS), n);
    let mut row = vec![0.0; n];
    for _ in 0..m {
        rows.fill_next(&mut row);
        for (pair, miss) in pairs.iter().zip(mismatches.iter_mut()) {
            let sa = dot(&row, &pair.0) >= 0.0;
            let sb = dot(&row, &pair.1) >= 0.0;
            if sa != sb {
                *miss += 1;
            }
        }
    }

    let mut max_dev = 0.0f64;
    for (pair, miss) in pairs.iter().zip(&mismatches) {
        let dg = geodesic_distance(&pair.0, &pair.1)?;
        let dev = (dg / std::f64::consts::PI - *miss as f64 / m as f64).abs();
        max_dev = max_dev.max(dev);
    }
    Ok(TessellationAudit {
        max_abs_deviation: max_dev,
        pair_count,
        m,
        delta_target,
    })
}

/// Nudge a unit vector along a random direction inside its own support and
/// renormalize, so sparse points stay sparse.
fn perturb_on_support(x: &[f64], scale: f64, rng: RngSpec) -> Vec<f64> {
    let support: Vec<usize> = x
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, _)| i)
        .collect();
    let noise = crate::sampling::gaussian_vector(rng, support.len());
    let noise_norm = norm2(&noise).max(1e-300);
    let mut out = x.to_vec();
    for (k, &idx) in support.iter().enumerate() {
        out[idx] += scale * noise[k] / noise_norm;
    }
    let l2 = norm2(&out).max(1e-300);
    for v in out.iter_mut() {
        *v /= l2;
    }
    out
}

/// Max over sampled difference vectors `z` of
/// `| (1/m) ||A z||_1 - sqrt(2/pi) ||z||_2 |` under one streamed Gaussian
/// matrix. `sampler` yields members of the difference body `K - K`.
pub fn l1_embedding_audit(
    sampler: impl Fn(RngSpec) -> Result<Vec<f64>>,
    n: usize,
    m: usize,
    sample_count: usize,
    rng: RngSpec,
) -> Result<f64> {
    if m == 0 || sample_count == 0 || n == 0 {
        return param_err("l1 embedding audit needs n, m, sample_count >= 1");
    }
    let points_rng = rng.derive(salt::POINTS);
    let mut points = Vec::with_capacity(sample_count);
    for j in 0..sample_count {
        let z = sampler(points_rng.derive(j as u64))?;
        if z.len() != n {
            return param_err(format!("sampler produced dimension {}, expected {n}", z.len()));
        }
        points.push(z);
    }

    let mut abs_sums = vec![0.0f64; sample_count];
    let mut rows = GaussianRows::new(rng.derive(salt::ROWS), n);
    let mut row = vec![0.0; n];
    for _ in 0..m {
        rows.fill_next(&mut row);
        for (z, acc) in points.iter().zip(abs_sums.iter_mut()) {
            *acc += dot(&row, z).abs();
        }
    }

    let scale = (2.0 / std::f64::consts::PI).sqrt();
    let mut max_dev = 0.0f64;
    for (z, acc) in points.iter().zip(&abs_sums) {
        let dev = (acc / m as f64 - scale * norm2(z)).abs();
        max_dev = max_dev.max(dev);
    }
    Ok(max_dev)
}

//! Euclidean projections onto the constraint sets and Dykstra's alternating
//! scheme for their intersections.

use crate::error::{Error, Result};
use crate::measure::CovarianceSpec;
use crate::sampling::{norm1, norm2};

/// A projection oracle onto one closed convex set.
pub type Projection<'a> = &'a (dyn Fn(&[f64]) -> Result<Vec<f64>> + Sync);

/// Euclidean projection onto `{ ||x||_1 <= radius }` by sort and threshold.
pub fn project_l1_ball(v: &[f64], radius: f64) -> Vec<f64> {
    assert!(radius > 0.0, "l1 radius must be positive");
    if norm1(v) <= radius {
        return v.to_vec();
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in mags.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - radius) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    v.iter()
        .map(|&x| x.signum() * (x.abs() - theta).max(0.0))
        .collect()
}

/// Euclidean projection onto `{ ||x||_2 <= radius }`.
pub fn project_l2_ball(v: &[f64], radius: f64) -> Vec<f64> {
    assert!(radius > 0.0, "l2 radius must be positive");
    let l2 = norm2(v);
    if l2 <= radius {
        v.to_vec()
    } else {
        let scale = radius / l2;
        v.iter().map(|x| x * scale).collect()
    }
}

/// Euclidean projection onto the ellipsoid `{ x : x^T Sigma x <= 1 }`.
///
/// Infeasible points map to `(I + mu Sigma)^{-1} v` where the multiplier
/// `mu > 0` is found by safeguarded Newton/bisection on the constraint in
/// the eigenbasis, to residual 1e-10.
pub fn project_ellipsoid(v: &[f64], cov: &CovarianceSpec) -> Result<Vec<f64>> {
    if v.len() != cov.dim() {
        return Err(Error::Parameter(format!(
            "vector dimension {} does not match covariance dimension {}",
            v.len(),
            cov.dim()
        )));
    }
    if cov.quad_form(v) <= 1.0 {
        return Ok(v.to_vec());
    }
    let u = cov.to_eigen_basis(v);
    let lam = cov.eigvals();

    let constraint = |mu: f64| -> f64 {
        u.iter()
            .zip(lam)
            .map(|(ui, &li)| {
                let d = 1.0 + mu * li;
                li * ui * ui / (d * d)
            })
            .sum::<f64>()
            - 1.0
    };
    let slope = |mu: f64| -> f64 {
        -2.0 * u
            .iter()
            .zip(lam)
            .map(|(ui, &li)| {
                let d = 1.0 + mu * li;
                li * li * ui * ui / (d * d * d)
            })
            .sum::<f64>()
    };

    // constraint(0) > 0 since v is infeasible; grow the bracket until negative.
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut grow = 0;
    while constraint(hi) > 0.0 {
        lo = hi;
        hi *= 4.0;
        grow += 1;
        if grow > 300 {
            return Err(Error::Numerical(format!(
                "ellipsoid projection bracket failed, residual {} at mu = {hi}",
                constraint(hi)
            )));
        }
    }
    let mut mu = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = constraint(mu);
        if f.abs() <= 1e-10 {
            let x: Vec<f64> = u
                .iter()
                .zip(lam)
                .map(|(ui, &li)| ui / (1.0 + mu * li))
                .collect();
            return Ok(cov.from_eigen_basis(&x));
        }
        if f > 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        let newton = mu - f / slope(mu);
        mu = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::Numerical(format!(
        "ellipsoid projection did not converge: residual {} after 200 iterations",
        constraint(mu)
    )))
}

/// Dykstra's alternating projection onto an intersection of convex sets.
///
/// Standard correction-term scheme; stops once a full cycle moves the iterate
/// by less than `tol` in the Euclidean norm, and reports the last movement if
/// `max_iter` cycles pass without that happening.
pub fn dykstra_project(
    v: &[f64],
    sets: &[Projection<'_>],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    if sets.is_empty() {
        return Err(Error::Parameter("dykstra needs at least one set".into()));
    }
    if sets.len() == 1 {
        return sets[0](v);
    }
    let n = v.len();
    let mut x = v.to_vec();
    let mut corrections = vec![vec![0.0; n]; sets.len()];
    let mut movement = f64::INFINITY;
    for _ in 0..max_iter {
        let cycle_start = x.clone();
        for (proj, corr) in sets.iter().zip(corrections.iter_mut()) {
            let shifted: Vec<f64> = x.iter().zip(corr.iter()).map(|(a, p)| a + p).collect();
            let projected = proj(&shifted)?;
            for ((p, s), y) in corr.iter_mut().zip(&shifted).zip(&projected) {
                *p = s - y;
            }
            x = projected;
        }
        movement = x
            .iter()
            .zip(&cycle_start)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if movement < tol {
            return Ok(x);
        }
    }
    Err(Error::Numerical(format!(
        "dykstra did not converge: last cycle moved {movement} (tol {tol})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{gaussian_vector, RngSpec};
    use approx::assert_abs_diff_eq;

    const DYKSTRA_TOL: f64 = 1e-9;
    const DYKSTRA_ITERS: usize = 10_000;

    #[test]
    fn l1_projection_inside_is_identity() {
        let v = vec![0.2, -0.3, 0.1];
        assert_eq!(project_l1_ball(&v, 1.0), v);
    }

    #[test]
    fn l1_projection_axis_point() {
        let out = project_l1_ball(&[2.0, 0.0], 1.0);
        assert_abs_diff_eq!(out[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn l1_projection_diagonal_point() {
        let out = project_l1_ball(&[1.0, 1.0], 1.0);
        assert_abs_diff_eq!(out[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(out[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(norm1(&out), 1.0, epsilon = 1e-10);
    }

    // Independent oracle: 1-D bisection on the soft-threshold level.
    fn l1_project_by_bisection(v: &[f64], radius: f64) -> Vec<f64> {
        if norm1(v) <= radius {
            return v.to_vec();
        }
        let shrunk_l1 = |t: f64| -> f64 {
            v.iter().map(|x| (x.abs() - t).max(0.0)).sum()
        };
        let (mut lo, mut hi) = (0.0, v.iter().fold(0.0f64, |a, x| a.max(x.abs())));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if shrunk_l1(mid) > radius {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        v.iter().map(|&x| x.signum() * (x.abs() - t).max(0.0)).collect()
    }

    #[test]
    fn l1_projection_matches_bisection_oracle() {
        for seed in 0..200 {
            let n = 1 + (seed as usize % 24);
            let v: Vec<f64> = gaussian_vector(RngSpec::new(seed), n);
            let radius = 0.1 + 2.0 * (seed as f64 % 7.0) / 7.0;
            let fast = project_l1_ball(&v, radius);
            let slow = l1_project_by_bisection(&v, radius);
            for (a, b) in fast.iter().zip(&slow) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
            assert!(norm1(&fast) <= radius + 1e-10);
        }
    }

    #[test]
    fn l2_projection_cases() {
        let out = project_l2_ball(&[3.0, 4.0], 1.0);
        assert_abs_diff_eq!(out[0], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(out[1], 0.8, epsilon = 1e-12);
        assert_eq!(project_l2_ball(&[0.0, 0.0], 1.0), vec![0.0, 0.0]);
    }

    #[test]
    fn ellipsoid_identity_covariance_reduces_to_sphere() {
        let cov = CovarianceSpec::identity(3);
        for seed in 0..50 {
            let v = gaussian_vector(RngSpec::new(seed), 3);
            let a = project_ellipsoid(&v, &cov).unwrap();
            let b = project_l2_ball(&v, 1.0);
            for (x, y) in a.iter().zip(&b) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn ellipsoid_axis_aligned_example() {
        let cov = CovarianceSpec::diagonal(vec![4.0, 1.0]).unwrap();
        let out = project_ellipsoid(&[2.0, 0.0], &cov).unwrap();
        assert_abs_diff_eq!(out[0], 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(out[1], 0.0, epsilon = 1e-12);
    }

    // Dense 1-D multiplier scan as an independent KKT oracle.
    fn ellipsoid_project_by_scan(v: &[f64], diag: &[f64]) -> Vec<f64> {
        let quad: f64 = v.iter().zip(diag).map(|(x, d)| d * x * x).sum();
        if quad <= 1.0 {
            return v.to_vec();
        }
        let constraint = |mu: f64| -> f64 {
            v.iter()
                .zip(diag)
                .map(|(x, d)| d * x * x / ((1.0 + mu * d) * (1.0 + mu * d)))
                .sum::<f64>()
        };
        let mut best_mu = 0.0;
        let mut best_gap = f64::INFINITY;
        // Coarse scan then local refinement.
        for k in 0..200_000 {
            let mu = 1e-6 * (1.0001f64).powi(k);
            let gap = (constraint(mu) - 1.0).abs();
            if gap < best_gap {
                best_gap = gap;
                best_mu = mu;
            }
            if mu > 1e8 {
                break;
            }
        }
        v.iter()
            .zip(diag)
            .map(|(x, d)| x / (1.0 + best_mu * d))
            .collect()
    }

    #[test]
    fn ellipsoid_projection_matches_scan_oracle() {
        for seed in 0..30 {
            let n = 2 + seed as usize % 5;
            let diag: Vec<f64> = gaussian_vector(RngSpec::new(1000 + seed), n)
                .iter()
                .map(|g| 0.2 + g.abs() * 2.0)
                .collect();
            let cov = CovarianceSpec::diagonal(diag.clone()).unwrap();
            let v: Vec<f64> = gaussian_vector(RngSpec::new(seed), n)
                .iter()
                .map(|g| g * 3.0)
                .collect();
            let fast = project_ellipsoid(&v, &cov).unwrap();
            let slow = ellipsoid_project_by_scan(&v, &diag);
            let was_infeasible = cov.quad_form(&v) > 1.0;
            if was_infeasible {
                assert_abs_diff_eq!(cov.quad_form(&fast), 1.0, epsilon = 1e-8);
            }
            for (a, b) in fast.iter().zip(&slow) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-4);
            }
            // KKT: residual v - x is parallel to Sigma x at the boundary.
            if was_infeasible {
                let sx: Vec<f64> = fast.iter().zip(&diag).map(|(x, d)| d * x).collect();
                let resid: Vec<f64> = v.iter().zip(&fast).map(|(a, b)| a - b).collect();
                let cross = crate::sampling::dot(&resid, &sx)
                    / (norm2(&resid) * norm2(&sx)).max(1e-300);
                assert!(cross > 1.0 - 1e-8, "KKT alignment {cross}");
            }
        }
    }

    #[test]
    fn dykstra_single_set_is_that_projection() {
        let v = vec![3.0, 4.0];
        let l2 = |u: &[f64]| Ok(project_l2_ball(u, 1.0));
        let out = dykstra_project(&v, &[&l2], DYKSTRA_TOL, DYKSTRA_ITERS).unwrap();
        assert_abs_diff_eq!(out[0], 0.6, epsilon = 1e-9);
    }

    #[test]
    fn dykstra_feasible_point_is_fixed() {
        let v = vec![0.1, 0.1, 0.1];
        let l2 = |u: &[f64]| Ok(project_l2_ball(u, 1.0));
        let l1 = |u: &[f64]| Ok(project_l1_ball(u, 1.0));
        let out = dykstra_project(&v, &[&l2, &l1], DYKSTRA_TOL, DYKSTRA_ITERS).unwrap();
        for (a, b) in out.iter().zip(&v) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    // Brute-force oracle: fine grid over the unit sphere in R^3, projected to
    // the l1 ball where needed, plus a dense grid on the l1 sphere.
    fn grid_project_intersection(v: &[f64], s_budget: f64) -> Vec<f64> {
        let radius = s_budget.sqrt();
        let mut best = vec![0.0; 3];
        let mut best_d = f64::INFINITY;
        let steps = 400;
        let mut consider = |x: [f64; 3]| {
            let l2 = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            let l1 = x[0].abs() + x[1].abs() + x[2].abs();
            if l2 > 1.0 + 1e-9 || l1 > radius + 1e-9 {
                return;
            }
            let d = v
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
            if d < best_d {
                best_d = d;
                best = x.to_vec();
            }
        };
        // Interior coarse grid catches projections off both boundaries.
        for i in 0..=steps {
            for j in 0..=steps {
                for k in 0..=steps / 4 {
                    let r = k as f64 / (steps / 4) as f64;
                    let theta = std::f64::consts::PI * i as f64 / steps as f64;
                    let phi = 2.0 * std::f64::consts::PI * j as f64 / steps as f64;
                    let x = [
                        r * theta.sin() * phi.cos(),
                        r * theta.sin() * phi.sin(),
                        r * theta.cos(),
                    ];
                    consider(x);
                }
            }
        }
        best
    }

    #[test]
    fn dykstra_matches_grid_oracle_on_ball_intersection() {
        let s_budget: f64 = 1.5;
        let radius = s_budget.sqrt();
        for seed in 0..5 {
            let v: Vec<f64> = gaussian_vector(RngSpec::new(40 + seed), 3)
                .iter()
                .map(|g| g * 1.5)
                .collect();
            let l2 = |u: &[f64]| Ok(project_l2_ball(u, 1.0));
            let l1 = move |u: &[f64]| Ok(project_l1_ball(u, radius));
            let out = dykstra_project(&v, &[&l2, &l1], DYKSTRA_TOL, DYKSTRA_ITERS).unwrap();
            let brute = grid_project_intersection(&v, s_budget);
            let d_out: f64 = v.iter().zip(&out).map(|(a, b)| (a - b) * (a - b)).sum();
            let d_brute: f64 = v.iter().zip(&brute).map(|(a, b)| (a - b) * (a - b)).sum();
            // The grid point cannot beat the true projection by more than
            // its resolution; and Dykstra must be at least as close.
            assert!(
                d_out <= d_brute + 1e-5,
                "dykstra distance {d_out} vs grid {d_brute}"
            );
            for (a, b) in out.iter().zip(&brute) {
                assert_abs_diff_eq!(a, b, epsilon = 2e-2);
            }
        }
    }

    #[test]
    fn projection_variational_inequality() {
        // <v - P(v), z - P(v)> <= tol for feasible z: characterizes the
        // Euclidean projection onto a convex set. Checked for every shipped
        // projection, including the Dykstra intersection.
        let n = 4;
        let cov = CovarianceSpec::diagonal(vec![3.0, 1.0, 0.5, 2.0]).unwrap();
        let cov_vi = cov.clone();
        let projections: Vec<(&str, Box<dyn Fn(&[f64]) -> Vec<f64>>)> = vec![
            ("l1", Box::new(|u: &[f64]| project_l1_ball(u, 1.3))),
            ("l2", Box::new(|u: &[f64]| project_l2_ball(u, 0.8))),
            (
                "ellipsoid",
                Box::new(move |u: &[f64]| project_ellipsoid(u, &cov_vi).unwrap()),
            ),
            (
                "intersection",
                Box::new(|u: &[f64]| {
                    let l2 = |w: &[f64]| Ok(project_l2_ball(w, 1.0));
                    let l1 = |w: &[f64]| Ok(project_l1_ball(w, 1.3));
                    dykstra_project(u, &[&l2, &l1], 1e-10, DYKSTRA_ITERS).unwrap()
                }),
            ),
        ];
        for (label, project) in &projections {
            for seed in 0..20 {
                let v: Vec<f64> = gaussian_vector(RngSpec::new(seed), n)
                    .iter()
                    .map(|g| g * 2.0)
                    .collect();
                let p = project(&v);
                for zi in 0..100 {
                    let z = project(&gaussian_vector(RngSpec::new(10_000 + seed * 100 + zi), n));
                    let lhs: f64 = v
                        .iter()
                        .zip(&p)
                        .zip(z.iter().zip(&p))
                        .map(|((vi, pi), (zi, pi2))| (vi - pi) * (zi - pi2))
                        .sum();
                    assert!(lhs <= 1e-8, "{label}: variational inequality violated: {lhs}");
                }
            }
        }
    }
}

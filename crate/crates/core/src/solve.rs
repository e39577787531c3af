//! The estimator: maximize the linear objective `<c, x'>` over a constraint
//! set, where `c = (1/m) A^T y` is all the data the program ever sees.
//!
//! Since the objective is linear, the full `max <y, A x'>` program depends on
//! `(A, y)` only through `c`; every solver here takes `c`, which is what
//! makes O(n)-memory streaming synthesis possible. None of the solvers knows
//! the link function or its parameters.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{param_err, Error, Result};
use crate::geometry::{dykstra_project, project_ellipsoid, project_l1_ball, project_l2_ball};
use crate::measure::{lambda_analytic, CovarianceSpec, MeasurementRecord};
use crate::sampling::{dot, norm1, norm2};

/// Feasible sets for the maximization.
pub enum ConstraintSet {
    /// `{ ||x||_2 <= 1, ||x||_1 <= sqrt(s) }`.
    SparseBall { n: usize, s: f64 },
    /// `{ ||x||_1 <= sqrt(s / lambda_min), ||Sigma^(1/2) x||_2 <= 1 }`.
    CorrelatedSparse { cov: CovarianceSpec, s: f64 },
    /// Matrices with `||X||_* <= sqrt(r)` and `||X||_F <= 1`.
    NuclearFrobenius { n1: usize, n2: usize, r: f64 },
    /// Any closed convex body given by its projection oracle.
    Oracle {
        dim: usize,
        project: Box<dyn Fn(&[f64]) -> Result<Vec<f64>> + Sync>,
    },
}

impl std::fmt::Debug for ConstraintSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConstraintSet::SparseBall { n, s } => write!(f, "SparseBall {{ n: {n}, s: {s} }}"),
            ConstraintSet::CorrelatedSparse { cov, s } => {
                write!(f, "CorrelatedSparse {{ dim: {}, s: {s} }}", cov.dim())
            }
            ConstraintSet::NuclearFrobenius { n1, n2, r } => {
                write!(f, "NuclearFrobenius {{ n1: {n1}, n2: {n2}, r: {r} }}")
            }
            ConstraintSet::Oracle { dim, .. } => write!(f, "Oracle {{ dim: {dim} }}"),
        }
    }
}

impl ConstraintSet {
    pub fn dim(&self) -> usize {
        match self {
            ConstraintSet::SparseBall { n, .. } => *n,
            ConstraintSet::CorrelatedSparse { cov, .. } => cov.dim(),
            ConstraintSet::NuclearFrobenius { n1, n2, .. } => n1 * n2,
            ConstraintSet::Oracle { dim, .. } => *dim,
        }
    }

    /// Largest constraint violation at `x` (0 when feasible). The oracle
    /// variant measures the distance to its own projection.
    pub fn residual(&self, x: &[f64]) -> f64 {
        match self {
            ConstraintSet::SparseBall { s, .. } => {
                (norm2(x) - 1.0).max(norm1(x) - s.sqrt()).max(0.0)
            }
            ConstraintSet::CorrelatedSparse { cov, s } => (cov.sigma_norm(x) - 1.0)
                .max(norm1(x) - (s / cov.lambda_min()).sqrt())
                .max(0.0),
            ConstraintSet::NuclearFrobenius { n1, n2, r } => {
                let sv = singular_values(x, *n1, *n2);
                (norm2(&sv) - 1.0).max(norm1(&sv) - r.sqrt()).max(0.0)
            }
            ConstraintSet::Oracle { project, .. } => match project(x) {
                Ok(p) => x
                    .iter()
                    .zip(&p)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt(),
                Err(_) => f64::INFINITY,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverTag {
    /// Closed-form soft-threshold family with a 1-D bisection.
    SparseThreshold,
    /// Projected ascent on the linear objective.
    ProjectedAscent,
    /// Projected ascent over the correlated constraint pair.
    CorrelatedAscent,
    /// SVD reduction to the singular-value vector.
    Spectral,
}

/// Solution report: the maximizer, its objective, and optional error metrics
/// against a supplied ground truth.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub x_hat: Vec<f64>,
    /// Rows and columns of the estimate; `(n, 1)` for vector problems.
    pub shape: (usize, usize),
    pub objective: f64,
    pub solver: SolverTag,
    pub iterations: usize,
    pub error_sq: Option<f64>,
    pub sigma_metric_error_sq: Option<f64>,
    pub lambda_used: Option<f64>,
    pub bound_value: Option<f64>,
}

/// Tuning for [`generic_argmax`]. The defaults are validated against the
/// closed-form solvers in the test suite.
#[derive(Debug, Clone)]
pub struct AscentOptions {
    /// Base step; scaled internally by `1 / ||c||_2`.
    pub step0: f64,
    /// Stop once the best objective improves by less than this (relative)
    /// over a full patience window.
    pub tol: f64,
    pub patience: usize,
    pub max_iter: usize,
    /// Starting point; defaults to the projection of the origin. Any start
    /// works: the objective is linear and the set convex, so there are no
    /// spurious optima.
    pub start: Option<Vec<f64>>,
}

impl Default for AscentOptions {
    fn default() -> Self {
        AscentOptions {
            step0: 1.0,
            tol: 1e-10,
            patience: 50,
            max_iter: 50_000,
            start: None,
        }
    }
}

/// Maximize `<c, x>` over the sparse ball `{ ||x||_2 <= 1, ||x||_1 <= sqrt(s) }`.
///
/// If the l1 constraint is slack at `c / ||c||_2`, that is the answer.
/// Otherwise the maximizer lies on the soft-threshold path
/// `x(t) = S_t(c) / ||S_t(c)||_2`, and the threshold solves
/// `||S_t(c)||_1 / ||S_t(c)||_2 = sqrt(s)`; the ratio is continuous and
/// nonincreasing in `t`, so a bisection finds the crossing. Crafted inputs
/// with heavy ties can make the crossing unreachable (the ratio plateaus
/// above the target); those fall back to projected ascent.
pub fn sparse_argmax(c: &[f64], s: f64) -> Result<EstimateReport> {
    let n = c.len();
    if s < 1.0 {
        return param_err(format!("sparsity budget must be >= 1, got {s}"));
    }
    let l2 = norm2(c);
    if l2 == 0.0 || !l2.is_finite() {
        return Err(Error::Degenerate(
            "objective direction is zero; every feasible point is optimal".into(),
        ));
    }
    let target = s.sqrt();
    if norm1(c) <= target * l2 * (1.0 + 1e-15) {
        let x: Vec<f64> = c.iter().map(|v| v / l2).collect();
        let objective = dot(c, &x);
        return Ok(report_vec(x, n, objective, SolverTag::SparseThreshold, 0));
    }

    let ratio = |t: f64| -> f64 {
        let mut l1 = 0.0;
        let mut l2sq = 0.0;
        for &v in c {
            let shrunk = (v.abs() - t).max(0.0);
            l1 += shrunk;
            l2sq += shrunk * shrunk;
        }
        if l2sq == 0.0 {
            f64::NAN
        } else {
            l1 / l2sq.sqrt()
        }
    };

    let max_mag = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    // If even just below the top magnitude the ratio exceeds the target, the
    // crossing does not exist (tied maxima); defer to the generic solver.
    let probe = ratio(max_mag * (1.0 - 1e-12));
    if !probe.is_finite() || probe > target {
        return sparse_argmax_fallback(c, s);
    }

    let (mut lo, mut hi) = (0.0, max_mag);
    let mut iterations = 0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let r = ratio(mid);
        iterations += 1;
        if !r.is_finite() {
            hi = mid;
            continue;
        }
        if (r - target).abs() <= 1e-12 * target {
            hi = mid;
            lo = mid;
            break;
        }
        if r > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * max_mag {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    let r = ratio(t);
    if !r.is_finite() || (r - target).abs() > 1e-6 * target {
        return sparse_argmax_fallback(c, s);
    }
    let mut x: Vec<f64> = c
        .iter()
        .map(|&v| v.signum() * (v.abs() - t).max(0.0))
        .collect();
    let xl2 = norm2(&x);
    for v in x.iter_mut() {
        *v /= xl2;
    }
    let objective = dot(c, &x);
    Ok(report_vec(x, n, objective, SolverTag::SparseThreshold, iterations))
}

fn sparse_argmax_fallback(c: &[f64], s: f64) -> Result<EstimateReport> {
    let radius = s.sqrt();
    let l2 = |u: &[f64]| Ok(project_l2_ball(u, 1.0));
    let l1 = move |u: &[f64]| Ok(project_l1_ball(u, radius));
    let project = move |u: &[f64]| dykstra_project(u, &[&l2, &l1], 1e-11, 10_000);
    generic_argmax(c, &project, &AscentOptions::default())
}

/// Maximize `<c, x>` over an arbitrary convex body given by a projection
/// oracle, by projected gradient ascent with diminishing steps and
/// best-iterate tracking.
pub fn generic_argmax(
    c: &[f64],
    project: &(dyn Fn(&[f64]) -> Result<Vec<f64>> + Sync),
    opts: &AscentOptions,
) -> Result<EstimateReport> {
    let n = c.len();
    let cl2 = norm2(c);
    if cl2 == 0.0 || !cl2.is_finite() {
        return Err(Error::Degenerate(
            "objective direction is zero; every feasible point is optimal".into(),
        ));
    }
    let step0 = opts.step0 / cl2;
    let mut x = match &opts.start {
        Some(v) => project(v)?,
        None => project(&vec![0.0; n])?,
    };
    let mut best = x.clone();
    let mut best_obj = dot(c, &best);
    let mut since_improvement = 0;
    for k in 0..opts.max_iter {
        let iterations = k + 1;
        let eta = step0 / ((k + 1) as f64).sqrt();
        let stepped: Vec<f64> = x.iter().zip(c).map(|(xi, ci)| xi + eta * ci).collect();
        x = project(&stepped)?;
        let obj = dot(c, &x);
        if obj > best_obj + opts.tol * (1.0 + best_obj.abs()) {
            best_obj = obj;
            best = x.clone();
            since_improvement = 0;
        } else {
            if obj > best_obj {
                best_obj = obj;
                best = x.clone();
            }
            since_improvement += 1;
            if since_improvement >= opts.patience {
                return Ok(report_vec(best, n, best_obj, SolverTag::ProjectedAscent, iterations));
            }
        }
    }
    Err(Error::Numerical(format!(
        "projected ascent did not stabilize in {} iterations; last objective {best_obj}",
        opts.max_iter
    )))
}

/// Maximize `<c, x>` over the correlated feasible set
/// `{ ||x||_1 <= sqrt(s / lambda_min), ||Sigma^(1/2) x||_2 <= 1 }`.
pub fn correlated_argmax(c: &[f64], cov: &CovarianceSpec, s: f64) -> Result<EstimateReport> {
    if c.len() != cov.dim() {
        return param_err(format!(
            "direction dimension {} does not match covariance dimension {}",
            c.len(),
            cov.dim()
        ));
    }
    if s < 1.0 {
        return param_err(format!("sparsity budget must be >= 1, got {s}"));
    }
    let radius = (s / cov.lambda_min()).sqrt();
    let l1 = move |u: &[f64]| Ok(project_l1_ball(u, radius));
    let ell = |u: &[f64]| project_ellipsoid(u, cov);
    let project = |u: &[f64]| dykstra_project(u, &[&ell, &l1], 1e-11, 10_000);
    let mut report = generic_argmax(c, &project, &AscentOptions::default())?;
    report.solver = SolverTag::CorrelatedAscent;
    Ok(report)
}

/// Maximize `<C, X>` over `{ ||X||_* <= sqrt(r), ||X||_F <= 1 }`.
///
/// The trace inner product is maximized by aligning singular bases, and both
/// constraints depend only on the spectrum, so the matrix program reduces to
/// [`sparse_argmax`] on the singular values of `C`.
pub fn lowrank_argmax(c: &[f64], n1: usize, n2: usize, r: f64) -> Result<EstimateReport> {
    const SVD_CAP: usize = 128;
    if c.len() != n1 * n2 {
        return param_err(format!(
            "matrix direction needs {} entries for {n1} x {n2}, got {}",
            n1 * n2,
            c.len()
        ));
    }
    if n1.min(n2) > SVD_CAP {
        return param_err(format!(
            "matrix dimensions {n1} x {n2} exceed the SVD cap {SVD_CAP}"
        ));
    }
    if r < 1.0 {
        return param_err(format!("rank budget must be >= 1, got {r}"));
    }
    let mat = DMatrix::from_row_slice(n1, n2, c);
    let svd = mat.svd(true, true);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let vt = svd.v_t.as_ref().expect("right singular vectors requested");
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    let spectral = sparse_argmax(&sigma, r)?;
    let scaled = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&spectral.x_hat));
    let xhat_mat = u * scaled * vt;
    let mut x_hat = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            x_hat.push(xhat_mat[(i, j)]);
        }
    }
    let objective = dot(c, &x_hat);
    Ok(EstimateReport {
        x_hat,
        shape: (n1, n2),
        objective,
        solver: SolverTag::Spectral,
        iterations: spectral.iterations,
        error_sq: None,
        sigma_metric_error_sq: None,
        lambda_used: None,
        bound_value: None,
    })
}

/// Singular values of a row-major matrix slice.
pub fn singular_values(c: &[f64], n1: usize, n2: usize) -> Vec<f64> {
    let mat = DMatrix::from_row_slice(n1, n2, c);
    mat.singular_values().iter().copied().collect()
}

/// Run the estimator on a measurement record: dispatch on the constraint
/// set, then fill error metrics against the ground truth when it is known.
///
/// `error_sq` compares against the truth projected to the unit sphere (the
/// estimable quantity); the sigma-metric error for correlated runs uses the
/// truth as supplied, which carries the `||Sigma^(1/2) x||_2 = 1`
/// normalization.
pub fn estimate(
    record: &MeasurementRecord,
    constraint: &ConstraintSet,
    truth: Option<&[f64]>,
) -> Result<EstimateReport> {
    if record.c.is_empty() {
        return param_err("measurement record has no direction vector");
    }
    if record.c.len() != constraint.dim() {
        return param_err(format!(
            "record dimension {} does not match constraint dimension {}",
            record.c.len(),
            constraint.dim()
        ));
    }
    let mut report = match constraint {
        ConstraintSet::SparseBall { s, .. } => sparse_argmax(&record.c, *s)?,
        ConstraintSet::CorrelatedSparse { cov, s } => correlated_argmax(&record.c, cov, *s)?,
        ConstraintSet::NuclearFrobenius { n1, n2, r } => {
            lowrank_argmax(&record.c, *n1, *n2, *r)?
        }
        ConstraintSet::Oracle { project, .. } => {
            generic_argmax(&record.c, project.as_ref(), &AscentOptions::default())?
        }
    };
    report.lambda_used = Some(lambda_analytic(record.model));
    if let Some(x) = truth {
        if x.len() != report.x_hat.len() {
            return param_err(format!(
                "truth dimension {} does not match estimate dimension {}",
                x.len(),
                report.x_hat.len()
            ));
        }
        let xl2 = norm2(x);
        if xl2 == 0.0 {
            return param_err("ground truth must be nonzero");
        }
        report.error_sq = Some(
            report
                .x_hat
                .iter()
                .zip(x)
                .map(|(a, b)| {
                    let d = a - b / xl2;
                    d * d
                })
                .sum(),
        );
        if let ConstraintSet::CorrelatedSparse { cov, .. } = constraint {
            let diff: Vec<f64> = report.x_hat.iter().zip(x).map(|(a, b)| a - b).collect();
            report.sigma_metric_error_sq = Some(cov.quad_form(&diff));
        }
    }
    Ok(report)
}

fn report_vec(
    x_hat: Vec<f64>,
    n: usize,
    objective: f64,
    solver: SolverTag,
    iterations: usize,
) -> EstimateReport {
    EstimateReport {
        x_hat,
        shape: (n, 1),
        objective,
        solver,
        iterations,
        error_sq: None,
        sigma_metric_error_sq: None,
        lambda_used: None,
        bound_value: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{gaussian_vector, RngSpec};
    use approx::assert_abs_diff_eq;

    fn sparse_ball_project(s: f64) -> impl Fn(&[f64]) -> Result<Vec<f64>> + Sync {
        let radius = s.sqrt();
        move |u: &[f64]| {
            let l2 = |v: &[f64]| Ok(project_l2_ball(v, 1.0));
            let l1 = |v: &[f64]| Ok(project_l1_ball(v, radius));
            dykstra_project(u, &[&l2, &l1], 1e-11, 10_000)
        }
    }

    #[test]
    fn full_budget_returns_normalized_direction() {
        let c = vec![1.0, -2.0, 2.0];
        let rep = sparse_argmax(&c, 3.0).unwrap();
        assert_abs_diff_eq!(rep.objective, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.x_hat[0], 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn budget_one_picks_the_top_coordinate() {
        let rep = sparse_argmax(&[3.0, -4.0, 1.0], 1.0).unwrap();
        assert_abs_diff_eq!(rep.objective, 4.0, epsilon = 1e-10);
        assert_abs_diff_eq!(rep.x_hat[1], -1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(rep.x_hat[0], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(rep.x_hat[2], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn tied_magnitudes_fall_back_and_stay_correct() {
        // Two tied maxima with budget 1: the threshold path plateaus at
        // ratio sqrt(2) and never crosses 1.
        let rep = sparse_argmax(&[1.0, 1.0], 1.0).unwrap();
        assert_eq!(rep.solver, SolverTag::ProjectedAscent);
        assert_abs_diff_eq!(rep.objective, 1.0, epsilon = 1e-6);
        assert!(norm1(&rep.x_hat) <= 1.0 + 1e-8);
    }

    #[test]
    fn zero_direction_is_degenerate() {
        assert!(matches!(
            sparse_argmax(&[0.0, 0.0], 2.0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn sparse_and_generic_objectives_agree() {
        for seed in 0..60 {
            let n = 2 + (seed as usize * 7) % 63;
            let c = gaussian_vector(RngSpec::new(seed), n);
            let s = 1.0 + (seed as f64 * 0.37) % (n as f64 - 1.0).max(0.001);
            let fast = sparse_argmax(&c, s).unwrap();
            let project = sparse_ball_project(s);
            let slow = generic_argmax(&c, &project, &AscentOptions::default()).unwrap();
            let rel = (fast.objective - slow.objective).abs() / fast.objective.abs().max(1e-12);
            assert!(
                rel <= 1e-6,
                "seed {seed} n {n} s {s}: {} vs {} (rel {rel})",
                fast.objective,
                slow.objective
            );
            assert!(fast.objective + 1e-9 >= slow.objective, "threshold path must win");
        }
    }

    #[test]
    fn ascent_on_plain_ball_recovers_normalized_direction() {
        let c = gaussian_vector(RngSpec::new(5), 16);
        let project = |u: &[f64]| Ok(project_l2_ball(u, 1.0));
        let rep = generic_argmax(&c, &project, &AscentOptions::default()).unwrap();
        assert_abs_diff_eq!(rep.objective, norm2(&c), epsilon = 1e-8);
    }

    #[test]
    fn ascent_escapes_an_adversarial_start() {
        // Start at the antipode of the optimum: a linear objective over a
        // convex set has no spurious optima, so the answer is still global.
        let mut c = vec![0.0; 8];
        c[0] = 1.0;
        let mut start = vec![0.0; 8];
        start[0] = -1.0;
        let project = sparse_ball_project(4.0);
        let opts = AscentOptions {
            start: Some(start),
            ..Default::default()
        };
        let rep = generic_argmax(&c, &project, &opts).unwrap();
        assert_abs_diff_eq!(rep.objective, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn scale_and_sign_equivariance() {
        let c = gaussian_vector(RngSpec::new(77), 12);
        let base = sparse_argmax(&c, 3.0).unwrap();
        for scale in [0.125f64, 2.0, 1024.0] {
            let scaled: Vec<f64> = c.iter().map(|v| v * scale).collect();
            let rep = sparse_argmax(&scaled, 3.0).unwrap();
            assert_eq!(rep.x_hat, base.x_hat, "power-of-two scaling is exact");
        }
        let neg: Vec<f64> = c.iter().map(|v| -v).collect();
        let rep = sparse_argmax(&neg, 3.0).unwrap();
        for (a, b) in rep.x_hat.iter().zip(&base.x_hat) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn correlated_with_identity_matches_sparse() {
        let cov = CovarianceSpec::identity(6);
        for seed in 0..10 {
            let c = gaussian_vector(RngSpec::new(100 + seed), 6);
            let a = correlated_argmax(&c, &cov, 2.5).unwrap();
            let b = sparse_argmax(&c, 2.5).unwrap();
            let rel = (a.objective - b.objective).abs() / b.objective.abs();
            assert!(rel <= 1e-6, "seed {seed}: {} vs {}", a.objective, b.objective);
        }
    }

    // Exact dual-path oracle for diagonal covariances: with the ellipsoid
    // constraint active, the maximizer is x_i = S_nu(c_i) / (2 mu d_i) with
    // mu fixed by the ellipsoid equation; scan nu for the l1 crossing and
    // keep the best feasible candidate, including the l1 vertices.
    fn correlated_dual_scan(c: &[f64], diag: &[f64], s: f64) -> f64 {
        let lam_min = diag.iter().copied().fold(f64::INFINITY, f64::min);
        let radius = (s / lam_min).sqrt();
        let candidate = |nu: f64| -> Option<(f64, f64)> {
            let shrunk: Vec<f64> = c
                .iter()
                .map(|&v| v.signum() * (v.abs() - nu).max(0.0))
                .collect();
            let q: f64 = shrunk.iter().zip(diag).map(|(v, d)| v * v / d).sum();
            if q <= 0.0 {
                return None;
            }
            let two_mu = q.sqrt();
            let x: Vec<f64> = shrunk.iter().zip(diag).map(|(v, d)| v / (two_mu * d)).collect();
            Some((norm1(&x), dot(c, &x)))
        };
        let mut best = f64::NEG_INFINITY;
        // Vertex candidates: +/- radius e_j when feasible.
        for (j, &d) in diag.iter().enumerate() {
            if radius * radius * d <= 1.0 + 1e-12 {
                best = best.max(c[j].abs() * radius);
            }
        }
        let max_mag = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let grid = 400_000;
        for k in 0..grid {
            let nu = max_mag * k as f64 / grid as f64;
            if let Some((l1, obj)) = candidate(nu) {
                if l1 <= radius + 1e-9 {
                    best = best.max(obj);
                }
            }
        }
        best
    }

    #[test]
    fn correlated_matches_dual_scan_oracle() {
        let diag = vec![4.0, 4.0, 4.0, 4.0, 1.0, 1.0, 1.0, 1.0];
        let cov = CovarianceSpec::diagonal(diag.clone()).unwrap();
        for seed in 0..12 {
            let c = gaussian_vector(RngSpec::new(300 + seed), 8);
            let s = 1.0 + (seed as f64 % 3.0);
            let fast = correlated_argmax(&c, &cov, s).unwrap();
            let oracle = correlated_dual_scan(&c, &diag, s);
            let rel = (fast.objective - oracle).abs() / oracle.abs().max(1e-12);
            assert!(
                rel <= 1e-4,
                "seed {seed} s {s}: solver {} vs oracle {oracle} (rel {rel})",
                fast.objective
            );
        }
    }

    #[test]
    fn correlated_output_is_feasible() {
        let cov = CovarianceSpec::diagonal(vec![3.0, 0.5, 1.5, 2.0, 0.75]).unwrap();
        for seed in 0..100 {
            let c = gaussian_vector(RngSpec::new(seed), 5);
            let s = 1.0 + (seed as f64 * 0.13) % 4.0;
            let rep = correlated_argmax(&c, &cov, s).unwrap();
            let set = ConstraintSet::CorrelatedSparse { cov: cov.clone(), s };
            assert!(set.residual(&rep.x_hat) <= 1e-8, "seed {seed}");
        }
    }

    #[test]
    fn lowrank_full_budget_is_normalized_direction() {
        let c = gaussian_vector(RngSpec::new(9), 20);
        let rep = lowrank_argmax(&c, 4, 5, 4.0).unwrap();
        let fro = norm2(&c);
        assert_abs_diff_eq!(rep.objective, fro, epsilon = 1e-9);
        for (a, b) in rep.x_hat.iter().zip(&c) {
            assert_abs_diff_eq!(*a, b / fro, epsilon = 1e-9);
        }
    }

    #[test]
    fn lowrank_rank_one_budget_is_top_singular_pair() {
        let c = gaussian_vector(RngSpec::new(10), 30);
        let rep = lowrank_argmax(&c, 5, 6, 1.0).unwrap();
        let sv = singular_values(&c, 5, 6);
        let top = sv.iter().fold(0.0f64, |a, &b| a.max(b));
        assert_abs_diff_eq!(rep.objective, top, epsilon = 1e-9);
        let out_sv = singular_values(&rep.x_hat, 5, 6);
        let out_top = out_sv.iter().fold(0.0f64, |a, &b| a.max(b));
        assert_abs_diff_eq!(out_top, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn lowrank_spectrum_matches_vector_solver() {
        for seed in 0..20 {
            let c = gaussian_vector(RngSpec::new(500 + seed), 30);
            let rep = lowrank_argmax(&c, 6, 5, 2.0).unwrap();
            let sv = singular_values(&c, 6, 5);
            let spectral = sparse_argmax(&sv, 2.0).unwrap();
            let mut got = singular_values(&rep.x_hat, 6, 5);
            let mut want = spectral.x_hat.clone();
            got.sort_by(|a, b| b.total_cmp(a));
            want.sort_by(|a, b| b.total_cmp(a));
            for (a, b) in got.iter().zip(&want) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn optimality_certificate_against_random_feasible_points() {
        let s = 3.0;
        for seed in 0..10 {
            let n = 10;
            let c = gaussian_vector(RngSpec::new(900 + seed), n);
            let rep = sparse_argmax(&c, s).unwrap();
            let cl2 = norm2(&c);
            let project = sparse_ball_project(s);
            for zi in 0..1000 {
                let raw = gaussian_vector(RngSpec::new(7000 + seed * 1000 + zi), n);
                let z = project(&raw).unwrap();
                assert!(
                    dot(&c, &rep.x_hat) >= dot(&c, &z) - 1e-6 * cl2,
                    "seed {seed} point {zi}"
                );
            }
        }
    }

    #[test]
    fn estimate_with_synthetic_population_direction() {
        // If c is exactly lambda * x for a feasible x, the program recovers x.
        let mut x = vec![0.0; 12];
        x[2] = 0.6;
        x[7] = -0.8;
        let lambda = 0.79;
        let c: Vec<f64> = x.iter().map(|v| v * lambda).collect();
        let rep = sparse_argmax(&c, 2.0).unwrap();
        let err: f64 = rep.x_hat.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
        assert!(err <= 1e-10, "population objective should recover x, err {err}");
    }
}

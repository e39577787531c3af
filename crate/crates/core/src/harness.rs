//! Monte Carlo experiment sweeps with theoretical-bound overlays.
//!
//! A sweep walks a grid of measurement counts, runs independently seeded
//! trials in each cell, and emits one row per trial. Rows are reproducible
//! from (base seed, cell, trial) alone, cells may run on any number of
//! workers, and output ordering is canonical, so reruns are byte-identical.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{param_err, Error, Result};
use crate::geometry::mean_width_mc;
use crate::measure::{
    corrupt, lambda_analytic, synthesize_flat, CorruptionStrategy, CovarianceSpec, LinkModel,
    SynthesisOptions,
};
use crate::sampling::{norm2, sample_signal, RngSpec, SignalKind};
use crate::solve::{correlated_argmax, lowrank_argmax, sparse_argmax, EstimateReport};

/// Constraint family swept over, with its structure parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConstraintConfig {
    Sparse { s: f64 },
    Correlated { s: f64, diagonal: Vec<f64> },
    LowRank { r: f64, n1: usize, n2: usize },
}

fn default_trials() -> usize {
    25
}
fn default_beta() -> f64 {
    1.0
}
fn default_calibration() -> f64 {
    1.0
}
fn default_width_samples() -> usize {
    400
}
fn default_workers() -> usize {
    1
}
fn default_signal_kind() -> SignalKind {
    SignalKind::ExactSparse
}
fn default_strategy() -> CorruptionStrategy {
    CorruptionStrategy::Random
}

/// Full description of one sweep; serializable so a run can be reproduced
/// from its config echo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n: usize,
    pub constraint: ConstraintConfig,
    pub model: LinkModel,
    pub m_grid: Vec<usize>,
    #[serde(default)]
    pub tau: f64,
    #[serde(default = "default_strategy")]
    pub strategy: CorruptionStrategy,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub base_seed: u64,
    #[serde(default = "default_signal_kind")]
    pub signal_kind: SignalKind,
    /// Free deviation parameter recorded into the fixed-signal bound.
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Calibration constant for deriving the accuracy parameter of the
    /// uniform bound from `m`; the governing constants are not specified, so
    /// this stays a reported knob, never an assertion.
    #[serde(default = "default_calibration")]
    pub calibration_c: f64,
    #[serde(default = "default_width_samples")]
    pub width_samples: usize,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Record wall-clock times. Off by default so output files are
    /// byte-identical across reruns; timings are inherently nondeterministic.
    #[serde(default)]
    pub timing: bool,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_grid.is_empty() {
            return param_err("m_grid must be nonempty");
        }
        if self.m_grid.iter().any(|&m| m == 0) {
            return param_err("every m in the grid must be >= 1");
        }
        if self.trials == 0 {
            return param_err("trials must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return param_err(format!("tau must be in [0, 1], got {}", self.tau));
        }
        if self.width_samples == 0 {
            return param_err("width_samples must be >= 1");
        }
        self.model.validate()?;
        match &self.constraint {
            ConstraintConfig::Sparse { s } => {
                if self.n == 0 || *s < 1.0 || *s > self.n as f64 {
                    return param_err(format!("need 1 <= s <= n, got s={s}, n={}", self.n));
                }
            }
            ConstraintConfig::Correlated { s, diagonal } => {
                if diagonal.len() != self.n {
                    return param_err(format!(
                        "covariance diagonal has {} entries, n = {}",
                        diagonal.len(),
                        self.n
                    ));
                }
                if *s < 1.0 || *s > self.n as f64 {
                    return param_err(format!("need 1 <= s <= n, got s={s}, n={}", self.n));
                }
            }
            ConstraintConfig::LowRank { r, n1, n2 } => {
                if n1 * n2 != self.n {
                    return param_err(format!(
                        "low-rank shape {n1} x {n2} does not match n = {}",
                        self.n
                    ));
                }
                if *r < 1.0 || *r > (*n1).min(*n2) as f64 {
                    return param_err(format!("need 1 <= r <= min(n1, n2), got r={r}"));
                }
            }
        }
        Ok(())
    }

    fn s_column(&self) -> f64 {
        match &self.constraint {
            ConstraintConfig::Sparse { s } | ConstraintConfig::Correlated { s, .. } => *s,
            ConstraintConfig::LowRank { r, .. } => *r,
        }
    }
}

/// One trial outcome. Optional metrics stay empty when a cell fails; the
/// failure itself lands in `error` and the sweep keeps going.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub s: f64,
    pub m: usize,
    pub model: String,
    pub p: Option<f64>,
    pub sigma: Option<f64>,
    pub alpha: Option<f64>,
    pub tau: f64,
    pub strategy: Option<String>,
    pub trial: usize,
    pub seed: u64,
    pub error_sq: Option<f64>,
    pub sigma_err_sq: Option<f64>,
    pub objective: Option<f64>,
    pub lambda: f64,
    pub w_hat: f64,
    pub bound_thm11: f64,
    pub beta: f64,
    pub bound_thm13: Option<f64>,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

/// The fixed-signal error bound `8 (w + beta) / (lambda sqrt(m))`.
pub fn bound_fixed_signal(lambda: f64, m: usize, w_hat: f64, beta: f64) -> f64 {
    8.0 / (lambda * (m as f64).sqrt()) * (w_hat + beta)
}

/// The uniform adversarial bound `delta sqrt(log(e/delta)) + 11 tau sqrt(log(e/tau))`.
pub fn bound_uniform(delta: f64, tau: f64) -> f64 {
    let first = if delta > 0.0 {
        delta * (std::f64::consts::E / delta).ln().max(0.0).sqrt()
    } else {
        0.0
    };
    let second = if tau > 0.0 {
        11.0 * tau * (std::f64::consts::E / tau).ln().max(0.0).sqrt()
    } else {
        0.0
    };
    first + second
}

/// Invert `m = C delta^{-6} w^2` for the accuracy parameter, clamped to 1.
pub fn delta_from_m(m: usize, w_hat: f64, calibration_c: f64) -> f64 {
    (calibration_c * w_hat * w_hat / m as f64).powf(1.0 / 6.0).min(1.0)
}

fn width_for(config: &SweepConfig) -> Result<f64> {
    let rng = RngSpec::new(config.base_seed).derive(crate::sampling::salt::WIDTH);
    let est = match &config.constraint {
        ConstraintConfig::Sparse { s } => {
            let s = *s;
            mean_width_mc(
                move |g| sparse_argmax(g, s).map(|r| r.objective).unwrap_or(0.0),
                config.n,
                config.width_samples,
                rng,
                "sparse-ball",
            )?
        }
        ConstraintConfig::Correlated { s, diagonal } => {
            let cov = CovarianceSpec::diagonal(diagonal.clone())?;
            let s = *s;
            mean_width_mc(
                move |g| {
                    correlated_argmax(g, &cov, s)
                        .map(|r| r.objective)
                        .unwrap_or(0.0)
                },
                config.n,
                config.width_samples,
                rng,
                "correlated-sparse",
            )?
        }
        ConstraintConfig::LowRank { r, n1, n2 } => {
            let (r, n1, n2) = (*r, *n1, *n2);
            mean_width_mc(
                move |g| {
                    lowrank_argmax(g, n1, n2, r)
                        .map(|rep| rep.objective)
                        .unwrap_or(0.0)
                },
                config.n,
                config.width_samples,
                rng,
                "nuclear-frobenius",
            )?
        }
    };
    Ok(est.w_hat)
}

fn run_trial(config: &SweepConfig, m: usize, trial_rng: RngSpec) -> Result<EstimateReport> {
    let signal_rng = trial_rng.derive(crate::sampling::salt::SIGNAL);
    let meas_rng = trial_rng.derive(10);
    let corrupt_rng = trial_rng.derive(11);
    let need_rows = config.tau > 0.0;

    let make_opts = |cov: Option<CovarianceSpec>| SynthesisOptions {
        retain_rows: need_rows,
        covariance: cov,
        ..Default::default()
    };

    match &config.constraint {
        ConstraintConfig::Sparse { s } => {
            let signal = sample_signal(signal_rng, config.n, *s, config.signal_kind)?;
            let mut record = synthesize_flat(
                signal.values(),
                config.model,
                m,
                meas_rng,
                &make_opts(None),
            )?;
            if config.tau > 0.0 {
                apply_corruption(&mut record, config, signal.values(), corrupt_rng)?;
            }
            let mut rep = sparse_argmax(&record.c, *s)?;
            fill_errors(&mut rep, signal.values(), None);
            Ok(rep)
        }
        ConstraintConfig::Correlated { s, diagonal } => {
            let cov = CovarianceSpec::diagonal(diagonal.clone())?;
            let base = sample_signal(signal_rng, config.n, *s, config.signal_kind)?;
            // Renormalize the sparse draw so the ellipsoid constraint holds
            // with equality for the truth.
            let scale = cov.sigma_norm(base.values());
            let truth: Vec<f64> = base.values().iter().map(|v| v / scale).collect();
            let mut record = synthesize_flat(
                &truth,
                config.model,
                m,
                meas_rng,
                &make_opts(Some(cov.clone())),
            )?;
            if config.tau > 0.0 {
                apply_corruption(&mut record, config, &truth, corrupt_rng)?;
            }
            let mut rep = correlated_argmax(&record.c, &cov, *s)?;
            fill_errors(&mut rep, &truth, Some(&cov));
            Ok(rep)
        }
        ConstraintConfig::LowRank { r, n1, n2 } => {
            let truth = sample_lowrank_truth(signal_rng, *n1, *n2, r.round() as usize);
            let mut record =
                synthesize_flat(&truth, config.model, m, meas_rng, &make_opts(None))?;
            if config.tau > 0.0 {
                apply_corruption(&mut record, config, &truth, corrupt_rng)?;
            }
            let mut rep = lowrank_argmax(&record.c, *n1, *n2, *r)?;
            fill_errors(&mut rep, &truth, None);
            Ok(rep)
        }
    }
}

/// Unit-Frobenius matrix of the requested rank, flattened row-major.
fn sample_lowrank_truth(rng: RngSpec, n1: usize, n2: usize, rank: usize) -> Vec<f64> {
    let rank = rank.clamp(1, n1.min(n2));
    let left = crate::sampling::gaussian_vector(rng.derive(0), n1 * rank);
    let right = crate::sampling::gaussian_vector(rng.derive(1), n2 * rank);
    let mut flat = vec![0.0; n1 * n2];
    for i in 0..n1 {
        for j in 0..n2 {
            let mut acc = 0.0;
            for k in 0..rank {
                acc += left[i * rank + k] * right[j * rank + k];
            }
            flat[i * n2 + j] = acc;
        }
    }
    let fro = norm2(&flat);
    for v in flat.iter_mut() {
        *v /= fro;
    }
    flat
}

fn apply_corruption(
    record: &mut crate::measure::MeasurementRecord,
    config: &SweepConfig,
    truth: &[f64],
    rng: RngSpec,
) -> Result<()> {
    let rows = record
        .rows
        .as_ref()
        .ok_or_else(|| Error::Parameter("corruption needs retained rows".into()))?;
    let context = rows.inner_products(truth);
    let corrupted = corrupt(&record.y, config.tau, config.strategy, rng, Some(&context))?;
    record.c = rows.direction(&corrupted);
    record.y = corrupted;
    Ok(())
}

fn fill_errors(rep: &mut EstimateReport, truth: &[f64], cov: Option<&CovarianceSpec>) {
    let tl2 = norm2(truth);
    rep.error_sq = Some(
        rep.x_hat
            .iter()
            .zip(truth)
            .map(|(a, b)| {
                let d = a - b / tl2;
                d * d
            })
            .sum(),
    );
    if let Some(cov) = cov {
        let diff: Vec<f64> = rep.x_hat.iter().zip(truth).map(|(a, b)| a - b).collect();
        rep.sigma_metric_error_sq = Some(cov.quad_form(&diff));
    }
}

/// Run every (m, trial) cell of the sweep. Rows come back in canonical
/// (grid position, trial) order regardless of worker count.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let lambda = lambda_analytic(config.model);
    let w_hat = width_for(config)?;
    let root = RngSpec::new(config.base_seed);

    let jobs: Vec<(usize, usize)> = config
        .m_grid
        .iter()
        .enumerate()
        .flat_map(|(mi, _)| (0..config.trials).map(move |t| (mi, t)))
        .collect();

    let run_job = |&(mi, trial): &(usize, usize)| -> SweepRow {
        let m = config.m_grid[mi];
        let trial_rng = root.derive(((mi as u64) << 32) | trial as u64);
        let started = Instant::now();
        let outcome = run_trial(config, m, trial_rng);
        let wall = if config.timing {
            started.elapsed().as_secs_f64()
        } else {
            0.0
        };
        let (p, sigma, alpha) = match config.model {
            LinkModel::Noiseless => (None, None, None),
            LinkModel::BitFlip { p } => (Some(p), None, None),
            LinkModel::PreQuantNoise { sigma } => (None, Some(sigma), None),
            LinkModel::Logistic { alpha } => (None, None, Some(alpha)),
        };
        let mut row = SweepRow {
            n: config.n,
            s: config.s_column(),
            m,
            model: config.model.label().to_string(),
            p,
            sigma,
            alpha,
            tau: config.tau,
            strategy: if config.tau > 0.0 {
                Some(config.strategy.label().to_string())
            } else {
                None
            },
            trial,
            seed: trial_rng.stream,
            error_sq: None,
            sigma_err_sq: None,
            objective: None,
            lambda,
            w_hat: w_hat,
            bound_thm11: bound_fixed_signal(lambda, m, w_hat, config.beta),
            beta: config.beta,
            bound_thm13: Some(bound_uniform(
                delta_from_m(m, w_hat, config.calibration_c),
                config.tau,
            )),
            wall_time_s: wall,
            error: None,
        };
        match outcome {
            Ok(rep) => {
                row.error_sq = rep.error_sq;
                row.sigma_err_sq = rep.sigma_metric_error_sq;
                row.objective = Some(rep.objective);
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        row
    };

    let mut rows: Vec<SweepRow> = if config.workers <= 1 {
        jobs.iter().map(run_job).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Numerical(format!("worker pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(run_job).collect())
    };
    rows.sort_by(|a, b| {
        let ka = (
            config.m_grid.iter().position(|&m| m == a.m).unwrap_or(0),
            a.trial,
        );
        let kb = (
            config.m_grid.iter().position(|&m| m == b.m).unwrap_or(0),
            b.trial,
        );
        ka.cmp(&kb)
    });
    Ok(rows)
}

/// Median of the values selected by `fy`, per distinct value of `fx`,
/// over rows that carry the metric.
pub fn per_cell_medians(
    rows: &[SweepRow],
    fx: impl Fn(&SweepRow) -> f64,
    fy: impl Fn(&SweepRow) -> Option<f64>,
) -> Vec<(f64, f64)> {
    let mut keys: Vec<f64> = rows.iter().map(&fx).collect();
    keys.sort_by(|a, b| a.total_cmp(b));
    keys.dedup();
    keys.iter()
        .filter_map(|&k| {
            let mut ys: Vec<f64> = rows
                .iter()
                .filter(|r| fx(r) == k)
                .filter_map(&fy)
                .collect();
            if ys.is_empty() {
                return None;
            }
            ys.sort_by(|a, b| a.total_cmp(b));
            Some((k, median_sorted(&ys)))
        })
        .collect()
}

fn median_sorted(sorted: &[f64]) -> f64 {
    let k = sorted.len();
    if k % 2 == 1 {
        sorted[k / 2]
    } else {
        0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Ordinary least squares of `log y` on `log x` over per-cell medians.
pub fn fit_scaling(
    rows: &[SweepRow],
    fx: impl Fn(&SweepRow) -> f64,
    fy: impl Fn(&SweepRow) -> Option<f64>,
) -> Result<ScalingFit> {
    let cells = per_cell_medians(rows, fx, fy);
    fit_scaling_points(&cells)
}

/// The log-log regression itself, on (x, median y) pairs.
pub fn fit_scaling_points(cells: &[(f64, f64)]) -> Result<ScalingFit> {
    if cells.len() < 3 {
        return param_err(format!(
            "scaling fit needs >= 3 distinct x values, got {}",
            cells.len()
        ));
    }
    let mut pts = Vec::with_capacity(cells.len());
    for &(x, y) in cells {
        if x <= 0.0 || y <= 0.0 {
            return Err(Error::Numerical(format!(
                "log-log fit needs positive data, got ({x}, {y})"
            )));
        }
        pts.push((x.ln(), y.ln()));
    }
    let k = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = k * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return param_err("degenerate x grid for scaling fit");
    }
    let slope = (k * sxy - sx * sy) / denom;
    Ok(ScalingFit {
        slope,
        intercept: (sy - slope * sx) / k,
    })
}

const CSV_HEADER: &str = "n,s,m,model,p,sigma,alpha,tau,strategy,trial,seed,error_sq,sigma_err_sq,objective,lambda,w_hat,bound_thm11,beta,bound_thm13,wall_time_s";

fn csv_field_f64(v: f64) -> String {
    format!("{v}")
}

fn csv_field_opt(v: Option<f64>) -> String {
    v.map(csv_field_f64).unwrap_or_default()
}

/// RFC 4180 CSV with shortest round-trip float formatting.
pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    wtr.write_record(CSV_HEADER.split(',')).expect("csv header");
    for r in rows {
        wtr.write_record([
            r.n.to_string(),
            csv_field_f64(r.s),
            r.m.to_string(),
            r.model.clone(),
            csv_field_opt(r.p),
            csv_field_opt(r.sigma),
            csv_field_opt(r.alpha),
            csv_field_f64(r.tau),
            r.strategy.clone().unwrap_or_default(),
            r.trial.to_string(),
            r.seed.to_string(),
            csv_field_opt(r.error_sq),
            csv_field_opt(r.sigma_err_sq),
            csv_field_opt(r.objective),
            csv_field_f64(r.lambda),
            csv_field_f64(r.w_hat),
            csv_field_f64(r.bound_thm11),
            csv_field_f64(r.beta),
            csv_field_opt(r.bound_thm13),
            csv_field_f64(r.wall_time_s),
        ])
        .expect("csv row");
    }
    String::from_utf8(wtr.into_inner().expect("csv flush")).expect("csv utf8")
}

/// JSON array of row objects; keys match the CSV columns plus `error`.
pub fn rows_to_json(rows: &[SweepRow]) -> String {
    serde_json::to_string_pretty(rows).expect("rows serialize")
}

/// Sidecar metadata: config echo, library version, and the source revision
/// when one was baked in at build time.
pub fn sweep_metadata(config: &SweepConfig) -> String {
    let meta = json!({
        "config": config,
        "version": env!("CARGO_PKG_VERSION"),
        "git_hash": option_env!("OBCS_GIT_HASH").unwrap_or("unknown"),
    });
    serde_json::to_string_pretty(&meta).expect("metadata serialize")
}

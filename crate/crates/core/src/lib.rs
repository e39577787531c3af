//! Reconstruction of structured signals from single-bit Gaussian
//! measurements.
//!
//! The estimator is a support-function maximization: given signs
//! `y_i in {-1, +1}` of (possibly noisy, possibly corrupted) linear
//! measurements with standard Gaussian rows `a_i`, form the direction
//! `c = (1/m) sum_i y_i a_i` and maximize `<c, x'>` over a convex signal set
//! — the sparse ball, its correlated-row analogue, or the
//! nuclear/Frobenius body for low-rank matrices. The crate bundles:
//!
//! - [`sampling`]: seeded, streaming Gaussian rows and ground-truth signals;
//! - [`measure`]: the four link models, their correlation coefficients, and
//!   adversarial bit corruption;
//! - [`geometry`]: projections, Dykstra's scheme, mean-width estimation, and
//!   the tessellation / l1-embedding audits;
//! - [`solve`]: the closed-form sparse maximizer, projected ascent, the
//!   correlated program, and the spectral low-rank solver;
//! - [`harness`]: seeded Monte Carlo sweeps with bound overlays and CSV/JSON
//!   output;
//! - [`record`] and [`config`]: the binary record format and the CLI config
//!   schema.

pub mod config;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod measure;
pub mod quadrature;
pub mod record;
pub mod sampling;
pub mod solve;

pub use error::{Error, Result};
pub use measure::{
    corrupt, lambda_analytic, lambda_empirical, synthesize, synthesize_flat, theta_eval,
    CorruptionStrategy, CovarianceSpec, LambdaEstimate, LinkModel, MeasurementRecord,
    SynthesisOptions,
};
pub use sampling::{gaussian_vector, sample_signal, RngSpec, Signal, SignalKind};
pub use solve::{
    correlated_argmax, estimate, generic_argmax, lowrank_argmax, sparse_argmax, AscentOptions,
    ConstraintSet, EstimateReport,
};

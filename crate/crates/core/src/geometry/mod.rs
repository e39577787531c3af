//! Support functions, projections onto the shipped constraint sets,
//! Monte Carlo mean-width estimation, sphere/Hamming metrics, and the
//! tessellation and l1-embedding audits.

mod audit;
mod metric;
mod proj;
mod width;

pub use audit::{l1_embedding_audit, tessellation_audit, TessellationAudit};
pub use metric::{geodesic_distance, hamming_distance};
pub use proj::{dykstra_project, project_ellipsoid, project_l1_ball, project_l2_ball, Projection};
pub use width::{expected_gaussian_norm, mean_width_mc, support_sparse_exact, MeanWidthEstimate};

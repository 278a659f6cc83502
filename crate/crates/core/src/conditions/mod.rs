//! Necessary conditions for a bounded extension operator and the lower
//! bounds they give for Φ and `‖E‖`.
//!
//! Unknown constants are set to 1 throughout; every report carries
//! `up_to_constants = true`. Only trends, finiteness and divergence are
//! constant-free.

mod aggregate;
mod check;
mod cusp;
mod density;
mod metric;
mod norms;

pub use aggregate::{aggregate_norm_lb, boundary_points, greedy_disjoint, Aggregate, ProbeBall};
pub use check::{check, CheckOptions, ConditionId, ConditionReport, Measure, ProbeRecord};
pub use cusp::{admissible_region, cusp_admissible_region, AdmissibilityEntry};
pub use density::{density_phi_lb, density_phi_raw, density_trend, dyadic_radii, DensityProbe, DensityTrend};
pub use metric::{metric_phi_lb, metric_phi_lb_on, MetricProbe};
pub use norms::{cell_centers, norm_lb_from_k, norm_lb_from_m, norm_trend, MSampling, NormBound};

//! Numerical probes for the geometry of Sobolev extension domains with
//! decreasing integrability.
//!
//! The crate evaluates, on concrete planar (and, for volume sampling, 3-D)
//! domains, the quantities that enter the necessary conditions for a bounded
//! extension operator `E: L¹_p(Ω) → L¹_q(ℝⁿ)`, `q ≤ p`:
//!
//! * [`geometry`]: domains, `|B(x,r) ∩ Ω|`, density ratios `K(x,r)`;
//! * [`metric`]: intrinsic (geodesic) distance on grid graphs, `M(x,r)`,
//!   and the far-set test function with its Lipschitz properties;
//! * [`capacity`]: discrete variational p-capacity of condensers;
//! * [`setfn`]: exponent bookkeeping, additive set functions, Φ lower
//!   estimates from a reflection extension operator, `L_α` norms;
//! * [`conditions`]: measure density, metric equivalence and capacity
//!   lower bounds for Φ and `‖E‖`.
//!
//! All lower bounds use the up-to-constants convention: unknown
//! dimension-dependent constants are set to 1 and every report carries
//! that flag.

pub mod capacity;
pub mod conditions;
mod error;
mod extended;
pub mod fit;
pub mod geometry;
pub mod metric;
pub mod optim;
pub mod par;
pub mod setfn;

pub use error::{Error, Result};
pub use extended::Extended;

/// Tool version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

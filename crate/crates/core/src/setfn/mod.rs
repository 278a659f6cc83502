//! Exponent bookkeeping, additive set functions, Φ lower estimates from a
//! reflection extension operator, and `L_α` norms of sampled fields.
//!
//! Φ is never computed exactly: the estimates here are maxima of norm
//! ratios over test families and therefore lower bounds, reported as
//! `phi_lb`.

mod additive;
mod exponents;
mod extension;
mod norm;

pub use additive::{AdditiveSetFunction, Generator, Rate, Region, Representation, SetValue};
pub use exponents::{kappa, m_alpha, regularity_alpha, DerivedAlpha, ExponentFlags, ExponentPair};
pub use extension::{
    estimate_phi, phi_ratio, random_family, Bump, DemoExtensionOperator, PhiEstimate, PhiRatio,
    TestFunction, MIN_FAMILY,
};
pub use norm::{lalpha_norm, LAlphaNorm};

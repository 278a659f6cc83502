use serde::Serialize;

use crate::{Error, Result};

/// Largest admissible `q` for the Hölder cusp at a given `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissibilityEntry {
    pub alpha: f64,
    pub p: f64,
    /// `2p/(α+1)`; admissible exponents satisfy `1 ≤ q < q_max`.
    pub q_max: f64,
    /// `q_max > 1`.
    pub feasible: bool,
}

pub fn cusp_admissible_region(alpha: f64, p: f64) -> Result<AdmissibilityEntry> {
    if !(alpha.is_finite() && alpha >= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must be >= 1, got {alpha}")));
    }
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidArgument(format!("p must be >= 1, got {p}")));
    }
    let q_max = 2.0 * p / (alpha + 1.0);
    Ok(AdmissibilityEntry {
        alpha,
        p,
        q_max,
        feasible: q_max > 1.0,
    })
}

/// Rows `p = p_min + k·step` up to `p_max`.
pub fn admissible_region(alpha: f64, p_min: f64, p_max: f64, step: f64) -> Result<Vec<AdmissibilityEntry>> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be > 0, got {step}")));
    }
    if !(p_max >= p_min) {
        return Err(Error::InvalidArgument(format!("need p_min <= p_max, got {p_min} > {p_max}")));
    }
    let count = ((p_max - p_min) / step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(Error::InvalidArgument(format!("{count} rows requested")));
    }
    (0..count)
        .map(|k| cusp_admissible_region(alpha, p_min + k as f64 * step))
        .collect()
}

//! Intrinsic metric `d_Ω` via shortest paths on lattice graphs, the local
//! equivalence constants `M(x,r)`, and the far-set test function
//! `f(t) = min(1, d_Ω(t, Ω_x) / d_Ω(x,y))`.

mod graph;
mod vaisala;

pub use graph::{GridGraph, Stencil};
pub use vaisala::{cell_gradient_tolerance, vaisala_test_function, TestFunctionField, VaisalaReport};

use crate::geometry::{dist, Domain};
use crate::{Error, Extended, Result};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub d_omega: Extended,
    pub d_euclid: f64,
    /// `d_omega / d_euclid` with the unsnapped Euclidean distance.
    pub ratio: Extended,
    pub stencil: Stencil,
    pub h: f64,
    pub reachable: bool,
    pub snap_x: f64,
    pub snap_y: f64,
}

fn point2(x: &[f64]) -> Result<[f64; 2]> {
    match x {
        [a, b] if a.is_finite() && b.is_finite() => Ok([*a, *b]),
        _ => Err(Error::InvalidArgument(format!("expected a finite planar point, got {x:?}"))),
    }
}

impl GridGraph {
    /// Grid geodesic distance between the nodes nearest to `x` and `y`.
    pub fn intrinsic_distance(&self, x: &[f64], y: &[f64]) -> Result<MetricReport> {
        let (x, y) = (point2(x)?, point2(y)?);
        let limit = self.snap_limit();
        let (sx, snap_x) = self.snap(&x, limit)?;
        let (sy, snap_y) = self.snap(&y, limit)?;
        let d = if self.component(sx) != self.component(sy) {
            f64::INFINITY
        } else {
            self.distances_to_targets(sx, &[sy])[sy]
        };
        let d_euclid = dist(&x, &y);
        let reachable = d.is_finite();
        let ratio = if !reachable {
            Extended::INFINITY
        } else if d_euclid > 0.0 {
            Extended::finite(d / d_euclid)
        } else {
            Extended::finite(1.0)
        };
        Ok(MetricReport {
            x,
            y,
            d_omega: Extended::new(d),
            d_euclid,
            ratio,
            stencil: self.stencil(),
            h: self.h(),
            reachable,
            snap_x,
            snap_y,
        })
    }

    /// Sup and inf of `d_Ω(x,y)/|x−y|` over `y = x + r·(cos θₖ, sin θₖ)`,
    /// `θₖ = 2πk/directions`, for the sampled `y` lying in Ω.
    ///
    /// Both ends are snapped to lattice nodes and the ratio is taken between
    /// the nodes, so it is at least 1 and at most `1 + ε` on convex sets.
    pub fn m_at_scale(&self, domain: &Domain, x: &[f64], r: f64, directions: usize) -> Result<MScale> {
        let x = point2(x)?;
        if directions < 16 {
            return Err(Error::InvalidArgument(format!(
                "at least 16 directions required, got {directions}"
            )));
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidArgument(format!("scale must be > 0, got {r}")));
        }
        let limit = self.snap_limit();
        if r <= 2.0 * limit {
            return Err(Error::ScaleUnresolved(format!(
                "scale {r} is within the snapping radius {limit:.3e} of the lattice"
            )));
        }
        let (sx, _) = self.snap(&x, limit)?;
        let px = self.position(sx);
        let mut targets = Vec::new();
        for k in 0..directions {
            let th = std::f64::consts::TAU * k as f64 / directions as f64;
            let y = [x[0] + r * th.cos(), x[1] + r * th.sin()];
            if !domain.contains(&y) {
                continue;
            }
            if let Ok((sy, _)) = self.snap(&y, limit) {
                targets.push(sy);
            }
        }
        if targets.is_empty() {
            return Err(Error::ScaleUnresolved(format!(
                "no sampled point at distance {r} from {x:?} lies in the domain"
            )));
        }
        let reachable_targets: Vec<usize> = targets
            .iter()
            .copied()
            .filter(|&t| self.component(t) == self.component(sx))
            .collect();
        let dist_map = self.distances_to_targets(sx, &reachable_targets);
        let ratios: Vec<Extended> = targets
            .iter()
            .map(|&t| {
                let d = if self.component(t) == self.component(sx) {
                    dist_map[t]
                } else {
                    f64::INFINITY
                };
                Extended::new(d / dist(&px, &self.position(t)))
            })
            .collect();
        let sup = ratios.iter().copied().fold(Extended::ZERO, |a, b| if b > a { b } else { a });
        let inf = ratios
            .iter()
            .copied()
            .fold(Extended::INFINITY, |a, b| if b < a { b } else { a });
        Ok(MScale {
            x,
            r,
            sup,
            inf,
            sampled: directions,
            in_domain: ratios.len(),
            ratios,
        })
    }
}

/// Result of [`GridGraph::m_at_scale`].
#[derive(Debug, Clone, Serialize)]
pub struct MScale {
    pub x: [f64; 2],
    pub r: f64,
    /// Supremal ratio: the Lipschitz-equivalence constant at scale `r`.
    pub sup: Extended,
    /// Infimal ratio, the literal reading of the inner infimum.
    pub inf: Extended,
    pub sampled: usize,
    pub in_domain: usize,
    pub ratios: Vec<Extended>,
}

pub fn intrinsic_distance(
    domain: &Domain,
    x: &[f64],
    y: &[f64],
    h: f64,
    stencil: Stencil,
) -> Result<MetricReport> {
    GridGraph::build(domain, h, stencil)?.intrinsic_distance(x, y)
}

/// `d_Ω(x,y) / |x − y|`; alias of the `ratio` field of [`intrinsic_distance`].
pub fn metric_ratio(domain: &Domain, x: &[f64], y: &[f64], h: f64, stencil: Stencil) -> Result<Extended> {
    Ok(intrinsic_distance(domain, x, y, h, stencil)?.ratio)
}

pub fn m_at_scale(
    domain: &Domain,
    x: &[f64],
    r: f64,
    h: f64,
    stencil: Stencil,
    directions: usize,
) -> Result<MScale> {
    GridGraph::build(domain, h, stencil)?.m_at_scale(domain, x, r, directions)
}

//! Domains and measure-theoretic quantities: `|B(x,r) ∩ Ω|`, the density
//! quotient `K(x,r) = |B(x,r)| / |B(x,r) ∩ Ω|` and its small-radius trend.

mod density;
mod domain;
pub mod expr;
mod interval;
mod volume;

pub use density::{density_ratio, limsup_density, DensityRatio, LimsupReport, DIVERGENCE_SLOPE};
pub use domain::{Domain, DomainSpec, Metadata};
pub use interval::IntervalSet;
pub use volume::{
    ball_intersection_volume, integrate_box, BoxIntegral, Method, MethodTag, Sampler,
    VolumeEstimate, MIN_SAMPLES,
};

use crate::{Error, Result};
use serde::Serialize;
use std::f64::consts::PI;

/// Volume of the unit ball in ℝⁿ.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BBox {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl BBox {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<BBox> {
        if min.len() != max.len() || min.is_empty() {
            return Err(Error::DomainSpec("bbox corners must have equal nonzero length".into()));
        }
        if min.iter().chain(&max).any(|v| !v.is_finite()) {
            return Err(Error::DomainSpec("bbox must be finite".into()));
        }
        if min.iter().zip(&max).any(|(a, b)| a > b) {
            return Err(Error::DomainSpec(format!("bbox min {min:?} exceeds max {max:?}")));
        }
        Ok(BBox { min, max })
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn contains_closed(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.min.iter().zip(&self.max))
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn volume(&self) -> f64 {
        self.min.iter().zip(&self.max).map(|(a, b)| b - a).product()
    }

    pub fn hull(&self, other: &BBox) -> BBox {
        BBox {
            min: self.min.iter().zip(&other.min).map(|(a, b)| a.min(*b)).collect(),
            max: self.max.iter().zip(&other.max).map(|(a, b)| a.max(*b)).collect(),
        }
    }

    /// Intersection; an empty overlap collapses to a degenerate box.
    pub fn intersect(&self, other: &BBox) -> BBox {
        let min: Vec<f64> = self.min.iter().zip(&other.min).map(|(a, b)| a.max(*b)).collect();
        let max = self
            .max
            .iter()
            .zip(&other.max)
            .zip(&min)
            .map(|((a, b), lo)| a.min(*b).max(*lo))
            .collect();
        BBox { min, max }
    }
}

/// Open Euclidean ball `B(center, radius)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Ball> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidArgument(format!("ball radius must be > 0, got {radius}")));
        }
        if center.is_empty() || center.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("ball center must be finite".into()));
        }
        Ok(Ball { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.dim()) * self.radius.powi(self.dim() as i32)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        dist2(&self.center, x) < self.radius * self.radius
    }

    pub fn bbox(&self) -> BBox {
        BBox {
            min: self.center.iter().map(|c| c - self.radius).collect(),
            max: self.center.iter().map(|c| c + self.radius).collect(),
        }
    }

    /// Open balls are disjoint iff their centers are at least `r₁ + r₂` apart.
    pub fn is_disjoint(&self, other: &Ball) -> bool {
        dist(&self.center, &other.center) >= self.radius + other.radius
    }
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

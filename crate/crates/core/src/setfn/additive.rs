use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::geometry::{dist, integrate_box, BBox, Ball};
use crate::{par, Error, Result};

/// Building block of regions: an open ball or an open axis box.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Generator {
    Ball(Ball),
    #[serde(rename = "box")]
    Rect(BBox),
}

impl Generator {
    pub fn dim(&self) -> usize {
        match self {
            Generator::Ball(b) => b.dim(),
            Generator::Rect(b) => b.dim(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Generator::Ball(b) => b.contains(x),
            Generator::Rect(b) => x
                .iter()
                .zip(b.min.iter().zip(&b.max))
                .all(|(v, (lo, hi))| v > lo && v < hi),
        }
    }

    pub fn bbox(&self) -> BBox {
        match self {
            Generator::Ball(b) => b.bbox(),
            Generator::Rect(b) => b.clone(),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Generator::Ball(b) => b.volume(),
            Generator::Rect(b) => b.volume(),
        }
    }

    /// Exact test for disjointness of the open sets.
    pub fn is_disjoint(&self, other: &Generator) -> bool {
        match (self, other) {
            (Generator::Ball(a), Generator::Ball(b)) => a.is_disjoint(b),
            (Generator::Rect(a), Generator::Rect(b)) => (0..a.dim())
                .any(|d| a.max[d] <= b.min[d] || b.max[d] <= a.min[d]),
            (Generator::Ball(c), Generator::Rect(r)) | (Generator::Rect(r), Generator::Ball(c)) => {
                let nearest: Vec<f64> = c
                    .center
                    .iter()
                    .zip(r.min.iter().zip(&r.max))
                    .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
                    .collect();
                dist(&nearest, &c.center) >= c.radius
            }
        }
    }
}

/// Finite union of pairwise disjoint generators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Region {
    parts: Vec<Generator>,
}

impl Region {
    pub fn new(parts: Vec<Generator>) -> Result<Region> {
        if parts.is_empty() {
            return Err(Error::InvalidArgument("region needs at least one generator".into()));
        }
        let n = parts[0].dim();
        if parts.iter().any(|g| g.dim() != n) {
            return Err(Error::InvalidArgument("generators differ in dimension".into()));
        }
        for i in 0..parts.len() {
            for j in i + 1..parts.len() {
                if !parts[i].is_disjoint(&parts[j]) {
                    return Err(Error::InvalidArgument(format!(
                        "generators {i} and {j} overlap"
                    )));
                }
            }
        }
        Ok(Region { parts })
    }

    pub fn ball(ball: Ball) -> Region {
        Region {
            parts: vec![Generator::Ball(ball)],
        }
    }

    pub fn parts(&self) -> &[Generator] {
        &self.parts
    }

    pub fn dim(&self) -> usize {
        self.parts[0].dim()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.parts.iter().any(|g| g.contains(x))
    }

    pub fn bbox(&self) -> BBox {
        let mut b = self.parts[0].bbox();
        for g in &self.parts[1..] {
            b = b.hull(&g.bbox());
        }
        b
    }

    /// Union with a region disjoint from this one.
    pub fn union(&self, other: &Region) -> Result<Region> {
        Region::new(self.parts.iter().chain(&other.parts).cloned().collect())
    }
}

pub type Rate = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Representation {
    /// `Φ(A) = ∫_A φ`; negative rates count as zero.
    Density(Rate),
    /// `Φ(A) = Σ value_k` over the family members making up `A`.
    Atomic { family: Vec<Generator>, values: Vec<f64> },
}

impl fmt::Debug for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Representation::Density(_) => f.write_str("Density(..)"),
            Representation::Atomic { family, values } => f
                .debug_struct("Atomic")
                .field("family", family)
                .field("values", values)
                .finish(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SetValue {
    pub value: f64,
    /// 95% half-width of the quadrature; zero for atomic values.
    pub stderr: f64,
    pub exact: bool,
    /// Whether `value` respects the total bound, if one is set.
    pub within_bound: Option<bool>,
}

/// Nonnegative finitely additive set function on regions.
#[derive(Debug, Clone)]
pub struct AdditiveSetFunction {
    repr: Representation,
    total_bound: Option<f64>,
    samples: u64,
}

impl AdditiveSetFunction {
    pub fn density(rate: Rate, samples: u64) -> AdditiveSetFunction {
        AdditiveSetFunction {
            repr: Representation::Density(rate),
            total_bound: None,
            samples,
        }
    }

    pub fn atomic(family: Vec<Generator>, values: Vec<f64>) -> Result<AdditiveSetFunction> {
        if family.len() != values.len() {
            return Err(Error::InvalidArgument("one value per generator required".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument("atomic values must be finite and >= 0".into()));
        }
        // Validates pairwise disjointness.
        Region::new(family.clone())?;
        Ok(AdditiveSetFunction {
            repr: Representation::Atomic { family, values },
            total_bound: None,
            samples: 0,
        })
    }

    /// Caps the total mass, e.g. by `‖E‖^κ`.
    pub fn with_total_bound(mut self, bound: f64) -> Result<AdditiveSetFunction> {
        if !(bound >= 0.0) {
            return Err(Error::InvalidArgument(format!("total bound must be >= 0, got {bound}")));
        }
        if let Representation::Atomic { values, .. } = &self.repr {
            let total: f64 = values.iter().sum();
            if total > bound {
                return Err(Error::InvalidArgument(format!(
                    "atomic total {total} exceeds the bound {bound}"
                )));
            }
        }
        self.total_bound = Some(bound);
        Ok(self)
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn evaluate(&self, region: &Region, seed: u64) -> Result<SetValue> {
        let (value, stderr, exact) = match &self.repr {
            Representation::Atomic { family, values } => {
                let mut total = 0.0;
                for part in region.parts() {
                    let k = family.iter().position(|g| g == part).ok_or_else(|| {
                        Error::NotGenerated(format!("{part:?} is not a family member"))
                    })?;
                    total += values[k];
                }
                (total, 0.0, true)
            }
            Representation::Density(rate) => {
                // Part by part, each with its own sub-seed.
                let parts = region.parts();
                let estimates = par::map_indexed(parts.len(), |k| {
                    let g = &parts[k];
                    integrate_box(
                        &g.bbox(),
                        |x| if g.contains(x) { rate(x).max(0.0) } else { 0.0 },
                        self.samples,
                        par::sub_seed(seed, k as u64),
                    )
                });
                let (mut value, mut var) = (0.0, 0.0);
                for e in estimates {
                    let e = e?;
                    value += e.value;
                    var += e.stderr * e.stderr;
                }
                (value, var.sqrt(), false)
            }
        };
        Ok(SetValue {
            value,
            stderr,
            exact,
            within_bound: self.total_bound.map(|b| value <= b + stderr),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Generator {
        Generator::Rect(BBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap())
    }

    #[test]
    fn constant_density_on_square() {
        let phi = AdditiveSetFunction::density(Arc::new(|_| 1.0), 10_000);
        let v = phi.evaluate(&Region::new(vec![unit_square()]).unwrap(), 1).unwrap();
        assert!((v.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn atomic_rejects_foreign_region() {
        let a = Generator::Ball(Ball::new(vec![0.0, 0.0], 1.0).unwrap());
        let b = Generator::Ball(Ball::new(vec![3.0, 0.0], 1.0).unwrap());
        let phi = AdditiveSetFunction::atomic(vec![a.clone(), b], vec![1.0, 2.0]).unwrap();
        assert_eq!(phi.evaluate(&Region::new(vec![a]).unwrap(), 0).unwrap().value, 1.0);
        let c = Generator::Ball(Ball::new(vec![0.0, 0.0], 0.5).unwrap());
        assert!(matches!(
            phi.evaluate(&Region::new(vec![c]).unwrap(), 0),
            Err(Error::NotGenerated(_))
        ));
    }

    #[test]
    fn disjointness() {
        let sq = unit_square();
        let touching = Generator::Ball(Ball::new(vec![2.0, 0.5], 1.0).unwrap());
        let cutting = Generator::Ball(Ball::new(vec![1.9, 0.5], 1.0).unwrap());
        let corner = Generator::Ball(Ball::new(vec![1.5, 1.5], 0.7).unwrap());
        assert!(sq.is_disjoint(&touching));
        assert!(!sq.is_disjoint(&cutting));
        assert!(sq.is_disjoint(&corner));
        assert!(Region::new(vec![sq.clone(), cutting]).is_err());
    }

    #[test]
    fn bound_is_checked() {
        let a = Generator::Ball(Ball::new(vec![0.0, 0.0], 1.0).unwrap());
        assert!(AdditiveSetFunction::atomic(vec![a.clone()], vec![2.0])
            .unwrap()
            .with_total_bound(1.0)
            .is_err());
        let phi = AdditiveSetFunction::density(Arc::new(|_| 1.0), 10_000)
            .with_total_bound(1.0)
            .unwrap();
        let v = phi.evaluate(&Region::new(vec![a]).unwrap(), 0).unwrap();
        assert_eq!(v.within_bound, Some(false));
    }
}

use super::expr::Expr;
use super::interval::IntervalSet;
use super::{BBox, Ball};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

/// JSON description of a domain.
///
/// ```json
/// {"kind":"cusp","alpha":2.0}
/// {"kind":"polygon","vertices":[[0,0],[1,0],[1,1]]}
/// {"kind":"implicit","expr":"x^2+y^2<1","bbox":[[-1,-1],[1,1]]}
/// {"kind":"union","parts":[ ... ]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainSpec {
    Cusp {
        alpha: f64,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    #[serde(rename = "box")]
    Rect {
        min: Vec<f64>,
        max: Vec<f64>,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    Implicit {
        expr: String,
        bbox: [Vec<f64>; 2],
    },
    Union {
        parts: Vec<DomainSpec>,
    },
    Intersection {
        parts: Vec<DomainSpec>,
    },
    Difference {
        base: Box<DomainSpec>,
        subtract: Box<DomainSpec>,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Metadata {
    pub convex: Option<bool>,
    pub connected: Option<bool>,
    pub cusp_alpha: Option<f64>,
}

#[derive(Debug, Clone)]
enum Shape {
    Cusp { alpha: f64 },
    Ball(Ball),
    Rect { min: Vec<f64>, max: Vec<f64> },
    Polygon { vertices: Vec<[f64; 2]> },
    Implicit { expr: Expr },
    Union(Vec<Domain>),
    Intersection(Vec<Domain>),
    Difference(Box<Domain>, Box<Domain>),
}

/// A bounded open set given by a membership predicate.
///
/// Membership uses the strict inequalities of each defining formula and is
/// `false` everywhere outside [`Domain::bbox`].
#[derive(Debug, Clone)]
pub struct Domain {
    shape: Shape,
    bbox: BBox,
    dim: usize,
    meta: Metadata,
    spec: DomainSpec,
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::DomainSpec(format!(
            "ambient dimension must be at least 2, got {dim}"
        )));
    }
    Ok(())
}

fn finite_all(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::DomainSpec(format!("{what} must be finite")))
    }
}

impl Domain {
    pub fn from_spec(spec: &DomainSpec) -> Result<Domain> {
        let (shape, bbox, dim, meta) = match spec {
            DomainSpec::Cusp { alpha } => {
                if !(alpha.is_finite() && *alpha >= 1.0) {
                    return Err(Error::DomainSpec(format!(
                        "cusp exponent must be >= 1, got {alpha}"
                    )));
                }
                let bbox = BBox::new(vec![0.0, -SQRT_2], vec![2.0 + SQRT_2, SQRT_2])?;
                let meta = Metadata {
                    convex: Some(false),
                    connected: Some(true),
                    cusp_alpha: Some(*alpha),
                };
                (Shape::Cusp { alpha: *alpha }, bbox, 2, meta)
            }
            DomainSpec::Ball { center, radius } => {
                let ball = Ball::new(center.clone(), *radius)?;
                check_dim(ball.dim())?;
                let bbox = ball.bbox();
                let dim = ball.dim();
                let meta = Metadata {
                    convex: Some(true),
                    connected: Some(true),
                    cusp_alpha: None,
                };
                (Shape::Ball(ball), bbox, dim, meta)
            }
            DomainSpec::Rect { min, max } => {
                let bbox = BBox::new(min.clone(), max.clone())?;
                check_dim(bbox.dim())?;
                let meta = Metadata {
                    convex: Some(true),
                    connected: Some(true),
                    cusp_alpha: None,
                };
                let dim = bbox.dim();
                (
                    Shape::Rect {
                        min: min.clone(),
                        max: max.clone(),
                    },
                    bbox,
                    dim,
                    meta,
                )
            }
            DomainSpec::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::DomainSpec("polygon needs at least 3 vertices".into()));
                }
                for v in vertices {
                    finite_all(v, "polygon vertices")?;
                }
                let min = vec![
                    vertices.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min),
                    vertices.iter().map(|v| v[1]).fold(f64::INFINITY, f64::min),
                ];
                let max = vec![
                    vertices.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max),
                    vertices.iter().map(|v| v[1]).fold(f64::NEG_INFINITY, f64::max),
                ];
                let bbox = BBox::new(min, max)?;
                let meta = Metadata {
                    convex: Some(polygon_is_convex(vertices)),
                    connected: Some(true),
                    cusp_alpha: None,
                };
                (
                    Shape::Polygon {
                        vertices: vertices.clone(),
                    },
                    bbox,
                    2,
                    meta,
                )
            }
            DomainSpec::Implicit { expr, bbox } => {
                let parsed = Expr::parse(expr)?;
                let bbox = BBox::new(bbox[0].clone(), bbox[1].clone())?;
                check_dim(bbox.dim())?;
                if parsed.arity() > bbox.dim() {
                    return Err(Error::DomainSpec(format!(
                        "expression uses {} coordinates but bbox has {}",
                        parsed.arity(),
                        bbox.dim()
                    )));
                }
                let dim = bbox.dim();
                (Shape::Implicit { expr: parsed }, bbox, dim, Metadata::default())
            }
            DomainSpec::Union { parts } | DomainSpec::Intersection { parts } => {
                if parts.is_empty() {
                    return Err(Error::DomainSpec("combinator needs at least one part".into()));
                }
                let parts = parts
                    .iter()
                    .map(Domain::from_spec)
                    .collect::<Result<Vec<_>>>()?;
                let dim = parts[0].dim;
                if parts.iter().any(|p| p.dim != dim) {
                    return Err(Error::DomainSpec("parts have different dimensions".into()));
                }
                let union = matches!(spec, DomainSpec::Union { .. });
                let mut bbox = parts[0].bbox.clone();
                for p in &parts[1..] {
                    bbox = if union {
                        bbox.hull(&p.bbox)
                    } else {
                        bbox.intersect(&p.bbox)
                    };
                }
                let shape = if union {
                    Shape::Union(parts)
                } else {
                    Shape::Intersection(parts)
                };
                (shape, bbox, dim, Metadata::default())
            }
            DomainSpec::Difference { base, subtract } => {
                let base = Domain::from_spec(base)?;
                let sub = Domain::from_spec(subtract)?;
                if base.dim != sub.dim {
                    return Err(Error::DomainSpec("parts have different dimensions".into()));
                }
                let bbox = base.bbox.clone();
                let dim = base.dim;
                (
                    Shape::Difference(Box::new(base), Box::new(sub)),
                    bbox,
                    dim,
                    Metadata::default(),
                )
            }
        };
        Ok(Domain {
            shape,
            bbox,
            dim,
            meta,
            spec: spec.clone(),
        })
    }

    pub fn from_json(json: &str) -> Result<Domain> {
        let spec: DomainSpec = serde_json::from_str(json)?;
        Domain::from_spec(&spec)
    }

    /// The Hölder cusp `{0 < x₁ ≤ 1, |x₂| < x₁^α} ∪ B((2,0), √2)`.
    pub fn cusp(alpha: f64) -> Result<Domain> {
        Domain::from_spec(&DomainSpec::Cusp { alpha })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Domain> {
        Domain::from_spec(&DomainSpec::Ball { center, radius })
    }

    /// Open axis-aligned box.
    pub fn rect(min: Vec<f64>, max: Vec<f64>) -> Result<Domain> {
        Domain::from_spec(&DomainSpec::Rect { min, max })
    }

    /// Open interior of a simple polygon; points on edges are outside.
    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<Domain> {
        Domain::from_spec(&DomainSpec::Polygon { vertices })
    }

    pub fn implicit(expr: &str, min: Vec<f64>, max: Vec<f64>) -> Result<Domain> {
        Domain::from_spec(&DomainSpec::Implicit {
            expr: expr.to_string(),
            bbox: [min, max],
        })
    }

    pub fn union(parts: Vec<DomainSpec>) -> Result<Domain> {
        Domain::from_spec(&DomainSpec::Union { parts })
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn bbox(&self) -> &BBox {
        &self.bbox
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metadata(&self) -> Metadata {
        self.meta
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        debug_assert_eq!(x.len(), self.dim);
        if !self.bbox.contains_closed(x) {
            return false;
        }
        self.contains_unchecked(x)
    }

    fn contains_unchecked(&self, x: &[f64]) -> bool {
        match &self.shape {
            Shape::Cusp { alpha } => {
                let (x1, x2) = (x[0], x[1]);
                let in_horn = x1 > 0.0 && x1 <= 1.0 && x2.abs() < x1.powf(*alpha);
                let (dx, dy) = (x1 - 2.0, x2);
                in_horn || dx * dx + dy * dy < 2.0
            }
            Shape::Ball(b) => b.contains(x),
            Shape::Rect { min, max } => x
                .iter()
                .zip(min.iter().zip(max))
                .all(|(v, (lo, hi))| v > lo && v < hi),
            Shape::Polygon { vertices } => polygon_contains(vertices, x[0], x[1]),
            Shape::Implicit { expr } => expr.eval(x) > 0.0,
            Shape::Union(parts) => parts.iter().any(|p| p.contains(x)),
            Shape::Intersection(parts) => parts.iter().all(|p| p.contains(x)),
            Shape::Difference(a, b) => a.contains(x) && !b.contains(x),
        }
    }

    /// Whether [`Domain::section`] is available (planar domains built from
    /// analytic pieces; implicit expressions have no sections).
    pub fn has_sections(&self) -> bool {
        if self.dim != 2 {
            return false;
        }
        match &self.shape {
            Shape::Implicit { .. } => false,
            Shape::Union(parts) | Shape::Intersection(parts) => {
                parts.iter().all(Domain::has_sections)
            }
            Shape::Difference(a, b) => a.has_sections() && b.has_sections(),
            _ => true,
        }
    }

    /// Exact vertical section `{x₂ : (x₁, x₂) ∈ Ω}` of a planar domain.
    pub fn section(&self, x1: f64) -> Option<IntervalSet> {
        if self.dim != 2 {
            return None;
        }
        if x1 < self.bbox.min[0] || x1 > self.bbox.max[0] {
            return self.has_sections().then(IntervalSet::empty);
        }
        Some(match &self.shape {
            Shape::Cusp { alpha } => {
                let mut pieces = Vec::with_capacity(2);
                if x1 > 0.0 && x1 <= 1.0 {
                    let w = x1.powf(*alpha);
                    pieces.push((-w, w));
                }
                let dx = x1 - 2.0;
                if dx * dx < 2.0 {
                    let c = (2.0 - dx * dx).sqrt();
                    pieces.push((-c, c));
                }
                IntervalSet::from_pieces(pieces)
            }
            Shape::Ball(b) => {
                let dx = x1 - b.center[0];
                let r2 = b.radius * b.radius - dx * dx;
                if r2 > 0.0 {
                    let c = r2.sqrt();
                    IntervalSet::interval(b.center[1] - c, b.center[1] + c)
                } else {
                    IntervalSet::empty()
                }
            }
            Shape::Rect { min, max } => {
                if x1 > min[0] && x1 < max[0] {
                    IntervalSet::interval(min[1], max[1])
                } else {
                    IntervalSet::empty()
                }
            }
            Shape::Polygon { vertices } => polygon_section(vertices, x1),
            Shape::Implicit { .. } => return None,
            Shape::Union(parts) => {
                let mut acc = IntervalSet::empty();
                for p in parts {
                    acc = acc.union(&p.section(x1)?);
                }
                acc
            }
            Shape::Intersection(parts) => {
                let mut acc = parts[0].section(x1)?;
                for p in &parts[1..] {
                    acc = acc.intersect(&p.section(x1)?);
                }
                acc
            }
            Shape::Difference(a, b) => a.section(x1)?.subtract(&b.section(x1)?),
        })
    }
}

fn on_segment(a: [f64; 2], b: [f64; 2], x: f64, y: f64) -> bool {
    let cross = (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]);
    cross == 0.0
        && x >= a[0].min(b[0])
        && x <= a[0].max(b[0])
        && y >= a[1].min(b[1])
        && y <= a[1].max(b[1])
}

fn polygon_contains(v: &[[f64; 2]], x: f64, y: f64) -> bool {
    let n = v.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        if on_segment(a, b, x, y) {
            return false;
        }
        if (a[1] > y) != (b[1] > y) {
            let xc = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if x < xc {
                inside = !inside;
            }
        }
    }
    inside
}

fn polygon_section(v: &[[f64; 2]], x: f64) -> IntervalSet {
    let n = v.len();
    let mut ys = Vec::new();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        if (a[0] > x) != (b[0] > x) {
            ys.push(a[1] + (x - a[0]) * (b[1] - a[1]) / (b[0] - a[0]));
        }
    }
    ys.sort_by(f64::total_cmp);
    IntervalSet::from_pieces(ys.chunks_exact(2).map(|c| (c[0], c[1])).collect())
}

fn polygon_is_convex(v: &[[f64; 2]]) -> bool {
    let n = v.len();
    let mut sign = 0.0f64;
    for i in 0..n {
        let (a, b, c) = (v[i], v[(i + 1) % n], v[(i + 2) % n]);
        let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
        if cross != 0.0 {
            if sign != 0.0 && cross.signum() != sign {
                return false;
            }
            sign = cross.signum();
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn l_shape() -> Domain {
        Domain::polygon(vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [2.0, 1.0],
            [2.0, 2.0],
            [0.0, 2.0],
        ])
        .unwrap()
    }

    #[test]
    fn cusp_membership() {
        let d = Domain::cusp(2.0).unwrap();
        assert!(d.contains(&[0.5, 0.1]));
        assert!(!d.contains(&[0.5, 0.3]));
        assert!(d.contains(&[2.0, 0.0]));
        // tip and the strict edge of the horn
        assert!(!d.contains(&[0.0, 0.0]));
        assert!(!d.contains(&[0.5, 0.25]));
        assert!(!d.contains(&[-1.0, 0.0]));
    }

    #[test]
    fn l_shape_excludes_notch_and_edges() {
        let d = l_shape();
        assert!(d.contains(&[0.5, 0.25]));
        assert!(d.contains(&[1.5, 1.25]));
        assert!(!d.contains(&[1.5, 0.5]));
        assert!(!d.contains(&[1.0, 0.5]));
        assert!(!d.contains(&[1.0, 1.0]));
        assert_eq!(d.metadata().convex, Some(false));
    }

    #[test]
    fn json_round_trip_and_combinators() {
        let json = r#"{"kind":"difference",
            "base":{"kind":"box","min":[0,0],"max":[2,2]},
            "subtract":{"kind":"union","parts":[
                {"kind":"ball","center":[1,1],"radius":0.5},
                {"kind":"implicit","expr":"x > 1.8","bbox":[[0,0],[2,2]]}]}}"#;
        let d = Domain::from_json(json).unwrap();
        assert!(d.contains(&[0.2, 0.2]));
        assert!(!d.contains(&[1.0, 1.1]));
        assert!(!d.contains(&[1.9, 0.2]));
        assert!(!d.has_sections());
        let again = serde_json::to_string(d.spec()).unwrap();
        assert_eq!(Domain::from_json(&again).unwrap().spec(), d.spec());
    }

    #[test]
    fn bad_specs_rejected() {
        assert!(Domain::from_json(r#"{"kind":"cusp","alpha":0.5}"#).is_err());
        assert!(Domain::from_json(r#"{"kind":"ball","center":[0],"radius":1}"#).is_err());
        assert!(Domain::from_json(r#"{"kind":"polygon","vertices":[[0,0],[1,1]]}"#).is_err());
        assert!(Domain::from_json(r#"{"kind":"implicit","expr":"z<1","bbox":[[0,0],[1,1]]}"#).is_err());
        assert!(Domain::from_json(r#"{"kind":"blob"}"#).is_err());
    }

    #[test]
    fn sections_match_membership_on_cusp() {
        let d = Domain::cusp(1.5).unwrap();
        for &x in &[0.1, 0.5, 0.9, 1.0, 1.5, 3.0] {
            let s = d.section(x).unwrap();
            for k in 0..400 {
                let y = -1.5 + 3.0 * (k as f64 + 0.5) / 400.0;
                let in_s = s.pieces().iter().any(|&(a, b)| y > a && y < b);
                assert_eq!(in_s, d.contains(&[x, y]), "x={x} y={y}");
            }
        }
    }

    proptest! {
        #[test]
        fn outside_bbox_is_outside(x in -10.0f64..10.0, y in -10.0f64..10.0) {
            for d in [Domain::cusp(2.0).unwrap(), l_shape(),
                      Domain::implicit("1", vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()] {
                if !d.bbox().contains_closed(&[x, y]) {
                    prop_assert!(!d.contains(&[x, y]));
                }
            }
        }

        #[test]
        fn polygon_sections_agree_with_membership(x in 0.01f64..1.99, y in 0.01f64..1.99) {
            let d = l_shape();
            let s = d.section(x).unwrap();
            let in_s = s.pieces().iter().any(|&(a, b)| y > a && y < b);
            prop_assert_eq!(in_s, d.contains(&[x, y]));
        }
    }
}

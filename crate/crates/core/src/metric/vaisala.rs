use super::{point2, GridGraph, Stencil};
use crate::geometry::{dist, Domain};
use crate::{Error, Result};
use serde::Serialize;

/// The far-set test function on a lattice graph.
///
/// With `R = d(x, y)` and far set `Ω_x = {s : d(x, s) ≥ R}`, the field is
/// `f(t) = min(1, d(t, Ω_x) / R)`. Unoccupied slots hold NaN.
#[derive(Debug, Clone)]
pub struct TestFunctionField {
    pub values: Vec<f64>,
    pub x_node: usize,
    pub y_node: usize,
    pub radius: f64,
    pub far_set: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VaisalaReport {
    pub radius: f64,
    pub stencil: Stencil,
    pub h: f64,
    /// Stencil metrication tolerance used for the Lipschitz and support checks.
    pub tolerance: f64,
    /// Bound for the cell gradient check, see [`cell_gradient_tolerance`].
    pub gradient_tolerance: f64,
    pub snap_x: f64,
    pub snap_y: f64,
    pub f_x: f64,
    pub f_y: f64,
    pub min_value: f64,
    pub max_value: f64,
    /// Largest `|f(u) − f(v)| · R / |u − v|` over graph edges.
    pub max_edge_lipschitz: f64,
    /// Largest `|∇_h f| · R` over complete lattice cells (bilinear
    /// gradient at the cell center).
    pub max_gradient: f64,
    /// Largest `|t − x| / R` over nodes with `f(t) > 0`.
    pub support_extent: f64,
    pub range_ok: bool,
    pub endpoints_ok: bool,
    pub lipschitz_ok: bool,
    pub gradient_ok: bool,
    pub support_ok: bool,
}

impl VaisalaReport {
    pub fn passes(&self) -> bool {
        self.range_ok && self.endpoints_ok && self.lipschitz_ok && self.gradient_ok && self.support_ok
    }
}

const ROUNDOFF: f64 = 1e-9;

/// Tolerance for `|∇_h f|·R`.
///
/// The bilinear cell gradient depends only on the four corners of a cell,
/// which are linked by the axis and diagonal edges present in every stencil.
/// A function that is 1-Lipschitz along those six edges has cell gradient at
/// most `sec(π/8) ≈ 1.0824`, and the bound is attained, so the 8-neighbour
/// tolerance applies to both stencils.
pub fn cell_gradient_tolerance() -> f64 {
    Stencil::Eight.tolerance()
}

impl GridGraph {
    pub fn vaisala_test_function(&self, x: &[f64], y: &[f64]) -> Result<(TestFunctionField, VaisalaReport)> {
        let (x, y) = (point2(x)?, point2(y)?);
        let limit = self.snap_limit();
        let (sx, snap_x) = self.snap(&x, limit)?;
        let (sy, snap_y) = self.snap(&y, limit)?;
        let from_x = self.distances_from(&[sx]);
        let radius = from_x[sy];
        if !radius.is_finite() {
            return Err(Error::Unreachable(format!("{y:?} is not reachable from {x:?}")));
        }
        if radius == 0.0 {
            return Err(Error::InvalidArgument("x and y snap to the same node".into()));
        }
        let far_set: Vec<usize> = (0..self.len())
            .filter(|&t| self.is_occupied(t) && from_x[t] >= radius)
            .collect();
        let to_far = self.distances_from(&far_set);
        let values: Vec<f64> = (0..self.len())
            .map(|t| {
                if self.is_occupied(t) {
                    (to_far[t] / radius).min(1.0)
                } else {
                    f64::NAN
                }
            })
            .collect();
        let field = TestFunctionField {
            values,
            x_node: sx,
            y_node: sy,
            radius,
            far_set,
        };
        let report = self.check_field(&field, x, snap_x, snap_y);
        Ok((field, report))
    }

    fn check_field(&self, field: &TestFunctionField, x: [f64; 2], snap_x: f64, snap_y: f64) -> VaisalaReport {
        let f = &field.values;
        let r = field.radius;
        let tol = self.stencil().tolerance();
        let occupied = || (0..self.len()).filter(|&t| self.is_occupied(t));

        let min_value = occupied().map(|t| f[t]).fold(f64::INFINITY, f64::min);
        let max_value = occupied().map(|t| f[t]).fold(f64::NEG_INFINITY, f64::max);

        let mut max_edge_lipschitz: f64 = 0.0;
        for u in occupied() {
            self.for_each_neighbor(u, |v, w| {
                max_edge_lipschitz = max_edge_lipschitz.max((f[u] - f[v]).abs() * r / w);
            });
        }

        let mut max_gradient: f64 = 0.0;
        let h = self.h();
        for u in occupied() {
            let (i, j) = self.lattice(u);
            let (Some(a), Some(b), Some(c)) = (self.index(i + 1, j), self.index(i, j + 1), self.index(i + 1, j + 1))
            else {
                continue;
            };
            let complete = self.has_edge(u, a)
                && self.has_edge(u, b)
                && self.has_edge(a, c)
                && self.has_edge(b, c)
                && self.has_edge(u, c)
                && self.has_edge(a, b);
            if !complete {
                continue;
            }
            let gx = ((f[a] - f[u]) + (f[c] - f[b])) / (2.0 * h);
            let gy = ((f[b] - f[u]) + (f[c] - f[a])) / (2.0 * h);
            max_gradient = max_gradient.max((gx * gx + gy * gy).sqrt() * r);
        }

        let support_extent = occupied()
            .filter(|&t| f[t] > 0.0)
            .map(|t| dist(&self.position(t), &x) / r)
            .fold(0.0, f64::max);

        let f_x = f[field.x_node];
        let f_y = f[field.y_node];
        VaisalaReport {
            radius: r,
            stencil: self.stencil(),
            h,
            tolerance: tol,
            gradient_tolerance: cell_gradient_tolerance(),
            snap_x,
            snap_y,
            f_x,
            f_y,
            min_value,
            max_value,
            max_edge_lipschitz,
            max_gradient,
            support_extent,
            range_ok: min_value >= 0.0 && max_value <= 1.0,
            endpoints_ok: (f_x - 1.0).abs() <= ROUNDOFF && f_y == 0.0,
            lipschitz_ok: max_edge_lipschitz <= 1.0 + tol + ROUNDOFF,
            gradient_ok: max_gradient <= 1.0 + cell_gradient_tolerance() + ROUNDOFF,
            support_ok: support_extent <= 1.0 + tol + snap_x / r,
        }
    }
}

/// Builds the lattice graph and evaluates the test function for `(x, y)`.
pub fn vaisala_test_function(
    domain: &Domain,
    x: &[f64],
    y: &[f64],
    h: f64,
    stencil: Stencil,
) -> Result<(GridGraph, TestFunctionField, VaisalaReport)> {
    let g = GridGraph::build(domain, h, stencil)?;
    let (field, report) = g.vaisala_test_function(x, y)?;
    Ok((g, field, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disc_midpoint_value() {
        let d = Domain::ball(vec![0.0, 0.0], 1.0).unwrap();
        let (g, field, rep) = vaisala_test_function(&d, &[-0.5, 0.0], &[0.5, 0.0], 1.0 / 128.0, Stencil::Sixteen).unwrap();
        assert!(rep.passes(), "{rep:?}");
        let mid = g.snap(&[0.0, 0.0], 1e-12).unwrap().0;
        assert!((field.values[mid] - 0.5).abs() < 0.02, "{}", field.values[mid]);
        assert_eq!(rep.f_x, 1.0);
        assert_eq!(rep.f_y, 0.0);
    }

    #[test]
    fn scaling_invariance() {
        let small = Domain::ball(vec![0.0, 0.0], 1.0).unwrap();
        let big = Domain::ball(vec![0.0, 0.0], 2.0).unwrap();
        let h = 1.0 / 32.0;
        let (gs, fs, rs) = vaisala_test_function(&small, &[-0.5, 0.25], &[0.5, 0.0], h, Stencil::Eight).unwrap();
        let (gb, fb, rb) = vaisala_test_function(&big, &[-1.0, 0.5], &[1.0, 0.0], 2.0 * h, Stencil::Eight).unwrap();
        assert_eq!(gs.node_count(), gb.node_count());
        for (a, b) in fs.values.iter().zip(&fb.values) {
            assert!((a.is_nan() && b.is_nan()) || (a - b).abs() < 1e-12);
        }
        assert!((rb.radius - 2.0 * rs.radius).abs() < 1e-12);
        // max_gradient is reported times R, so it is scale free; raw gradients scale by 1/λ
        assert!((rs.max_gradient - rb.max_gradient).abs() < 1e-9);
        assert!(((rb.max_gradient / rb.radius) - 0.5 * (rs.max_gradient / rs.radius)).abs() < 1e-9);
    }

    #[test]
    fn unreachable_pair_errors() {
        let d = Domain::union(vec![
            crate::geometry::DomainSpec::Ball { center: vec![-1.0, 0.0], radius: 0.5 },
            crate::geometry::DomainSpec::Ball { center: vec![1.0, 0.0], radius: 0.5 },
        ])
        .unwrap();
        assert!(matches!(
            vaisala_test_function(&d, &[-1.0, 0.0], &[1.0, 0.0], 0.05, Stencil::Eight),
            Err(Error::Unreachable(_))
        ));
    }
}

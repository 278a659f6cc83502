use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::additive::{Generator, Region};
use super::exponents::ExponentPair;
use crate::geometry::{dist, BBox, Domain};
use crate::{par, Error, Result};

/// Smallest test family accepted by [`estimate_phi`].
pub const MIN_FAMILY: usize = 50;

/// Reflection across `x₂ = 0` for `Ω = (a, b) × (0, c)`.
///
/// `E(f)(x₁, x₂) = f(x₁, −x₂)` for `x₂ < 0`, and `f` itself on `Ω`. The
/// extension is defined on the doubled box `(a, b) × (−c, c)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoExtensionOperator {
    pub x_range: [f64; 2],
    pub height: f64,
}

impl DemoExtensionOperator {
    pub fn new(x_range: [f64; 2], height: f64) -> Result<DemoExtensionOperator> {
        if !(x_range[0] < x_range[1] && height > 0.0 && height.is_finite())
            || x_range.iter().any(|v| !v.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "invalid half-box: x in {x_range:?}, height {height}"
            )));
        }
        Ok(DemoExtensionOperator { x_range, height })
    }

    pub fn omega(&self) -> Result<Domain> {
        Domain::rect(vec![self.x_range[0], 0.0], vec![self.x_range[1], self.height])
    }

    pub fn in_omega(&self, x: &[f64]) -> bool {
        x[0] > self.x_range[0] && x[0] < self.x_range[1] && x[1] > 0.0 && x[1] < self.height
    }

    /// Doubled box on which `E(f)` is defined.
    pub fn reach(&self) -> BBox {
        BBox {
            min: vec![self.x_range[0], -self.height],
            max: vec![self.x_range[1], self.height],
        }
    }

    /// The point of `Ω̄` whose value `E(f)` takes at `x`.
    pub fn source(&self, x: &[f64]) -> [f64; 2] {
        [x[0], x[1].abs()]
    }

    pub fn apply(&self, f: &TestFunction, x: &[f64]) -> f64 {
        f.value(&self.source(x))
    }
}

/// `a (1 − |z−c|²/w²)₊² (p₀ + p₁ u + p₂ v)` with `(u, v) = (z − c)/w`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bump {
    pub center: [f64; 2],
    pub width: f64,
    pub amplitude: f64,
    pub poly: [f64; 3],
}

impl Bump {
    pub fn value(&self, z: &[f64]) -> f64 {
        let u = (z[0] - self.center[0]) / self.width;
        let v = (z[1] - self.center[1]) / self.width;
        let s = 1.0 - u * u - v * v;
        if s <= 0.0 {
            return 0.0;
        }
        self.amplitude * s * s * (self.poly[0] + self.poly[1] * u + self.poly[2] * v)
    }
}

/// Finite sum of bumps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestFunction {
    pub bumps: Vec<Bump>,
}

impl TestFunction {
    pub fn value(&self, z: &[f64]) -> f64 {
        self.bumps.iter().map(|b| b.value(z)).sum()
    }

    /// `Σ s_k f_k`.
    pub fn combine(terms: &[(f64, &TestFunction)]) -> TestFunction {
        let bumps = terms
            .iter()
            .flat_map(|(s, f)| {
                f.bumps.iter().map(move |b| Bump {
                    amplitude: b.amplitude * s,
                    ..b.clone()
                })
            })
            .collect();
        TestFunction { bumps }
    }
}

/// Distance from `c` to the complement of the generator, 0 if outside.
fn inner_margin(g: &Generator, c: &[f64; 2]) -> f64 {
    match g {
        Generator::Ball(b) => (b.radius - dist(&b.center, c)).max(0.0),
        Generator::Rect(b) => (0..2)
            .map(|d| (c[d] - b.min[d]).min(b.max[d] - c[d]))
            .fold(f64::INFINITY, f64::min)
            .max(0.0),
    }
}

fn fits(region: &Region, bump: &Bump, h: f64) -> bool {
    region
        .parts()
        .iter()
        .any(|g| inner_margin(g, &bump.center) >= bump.width + h)
}

/// Seeded family of bump test functions supported in `region`.
///
/// Member `k` depends only on `seed` and `k`, so a smaller family is a
/// prefix of a larger one. Every bump keeps a margin `h` to `∂region`.
pub fn random_family(region: &Region, count: usize, h: f64, seed: u64) -> Result<Vec<TestFunction>> {
    if region.dim() != 2 {
        return Err(Error::InvalidArgument("test functions are planar".into()));
    }
    let parts = region.parts();
    let weights: Vec<f64> = parts.iter().map(Generator::volume).collect();
    let total: f64 = weights.iter().sum();
    (0..count)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let nbumps = rng.random_range(1..=3);
            let mut bumps = Vec::with_capacity(nbumps);
            for _ in 0..nbumps {
                let mut pick = rng.random::<f64>() * total;
                let part = parts
                    .iter()
                    .zip(&weights)
                    .find(|(_, w)| {
                        pick -= **w;
                        pick < 0.0
                    })
                    .map_or(&parts[parts.len() - 1], |(g, _)| g);
                let bb = part.bbox();
                let mut found = None;
                for _ in 0..1000 {
                    let c = [
                        bb.min[0] + (bb.max[0] - bb.min[0]) * rng.random::<f64>(),
                        bb.min[1] + (bb.max[1] - bb.min[1]) * rng.random::<f64>(),
                    ];
                    let room = inner_margin(part, &c) - h;
                    if room >= 2.0 * h {
                        found = Some((c, room));
                        break;
                    }
                }
                let (center, room) = found.ok_or_else(|| {
                    Error::Unresolved(format!("generator too small for bumps at h = {h}"))
                })?;
                bumps.push(Bump {
                    center,
                    width: room * rng.random_range(0.3..1.0),
                    amplitude: rng.random_range(0.5..1.5),
                    poly: [
                        1.0,
                        rng.random_range(-0.5..0.5),
                        rng.random_range(-0.5..0.5),
                    ],
                });
            }
            Ok(TestFunction { bumps })
        })
        .collect()
}

/// Cell lattice over a region: cells with centers in the region and in `Ω`.
struct Cells {
    h: f64,
    i0: i64,
    j0: i64,
    nx: usize,
    ny: usize,
    /// Lower-left node of cells whose center lies in the region.
    in_region: Vec<usize>,
    /// Subset of `in_region` with the center also in `Ω`.
    in_omega: Vec<usize>,
}

impl Cells {
    fn new(op: &DemoExtensionOperator, region: &Region, h: f64) -> Result<Cells> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidArgument(format!("h must be > 0, got {h}")));
        }
        let bb = region.bbox();
        let reach = op.reach();
        if (0..2).any(|d| bb.min[d] < reach.min[d] || bb.max[d] > reach.max[d]) {
            return Err(Error::InvalidArgument(
                "region leaves the box on which the extension is defined".into(),
            ));
        }
        let i0 = (bb.min[0] / h).floor() as i64;
        let j0 = (bb.min[1] / h).floor() as i64;
        let nx = ((bb.max[0] / h).ceil() as i64 - i0 + 1) as usize;
        let ny = ((bb.max[1] / h).ceil() as i64 - j0 + 1) as usize;
        let mut in_region = Vec::new();
        let mut in_omega = Vec::new();
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let c = [
                    (i0 + i as i64) as f64 * h + 0.5 * h,
                    (j0 + j as i64) as f64 * h + 0.5 * h,
                ];
                if region.contains(&c) {
                    in_region.push(j * nx + i);
                    if op.in_omega(&c) {
                        in_omega.push(j * nx + i);
                    }
                }
            }
        }
        Ok(Cells {
            h,
            i0,
            j0,
            nx,
            ny,
            in_region,
            in_omega,
        })
    }

    /// `(Σ |∇_h u|^s h²)^{1/s}` over `cells`, with the bilinear gradient at
    /// the cell center.
    fn grad_norm(&self, u: &[f64], cells: &[usize], s: f64) -> f64 {
        let nx = self.nx;
        let h = self.h;
        let sum: f64 = cells
            .iter()
            .map(|&c| {
                let (a, b, d, e) = (u[c], u[c + 1], u[c + nx], u[c + nx + 1]);
                let gx = ((b - a) + (e - d)) / (2.0 * h);
                let gy = ((d - a) + (e - b)) / (2.0 * h);
                (gx * gx + gy * gy).powf(0.5 * s)
            })
            .sum();
        (sum * h * h).powf(1.0 / s)
    }

    fn extended_nodes(&self, op: &DemoExtensionOperator, f: &TestFunction) -> Vec<f64> {
        (0..self.nx * self.ny)
            .map(|node| {
                let x = (self.i0 + (node % self.nx) as i64) as f64 * self.h;
                let y = (self.j0 + (node / self.nx) as i64) as f64 * self.h;
                op.apply(f, &[x, y])
            })
            .collect()
    }
}

/// Discrete norms behind one ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiRatio {
    /// `‖∇E(f)‖_{L_q(A)}`.
    pub extended_norm: f64,
    /// `‖∇f‖_{L_p(A∩Ω)}`.
    pub source_norm: f64,
    /// `(extended_norm / source_norm)^κ`, `None` when `source_norm ≈ 0`.
    pub ratio: Option<f64>,
}

const DEGENERATE: f64 = 1e-12;

fn ratio_on(cells: &Cells, op: &DemoExtensionOperator, f: &TestFunction, pq: &ExponentPair, kappa: f64) -> PhiRatio {
    let u = cells.extended_nodes(op, f);
    let extended_norm = cells.grad_norm(&u, &cells.in_region, pq.q);
    let source_norm = cells.grad_norm(&u, &cells.in_omega, pq.p);
    let ratio = (source_norm > DEGENERATE).then(|| (extended_norm / source_norm).powf(kappa));
    PhiRatio {
        extended_norm,
        source_norm,
        ratio,
    }
}

/// `(‖∇E(f)‖_{L_q(A)} / ‖∇f‖_{L_p(A∩Ω)})^κ` for a single test function.
pub fn phi_ratio(
    op: &DemoExtensionOperator,
    region: &Region,
    pq: &ExponentPair,
    f: &TestFunction,
    h: f64,
) -> Result<PhiRatio> {
    pq.require("phi estimate", false)?;
    let kappa = pq.kappa()?;
    let cells = Cells::new(op, region, h)?;
    Ok(ratio_on(&cells, op, f, pq, kappa))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiEstimate {
    /// Largest ratio over the family: a lower bound for `Φ(A)`.
    pub phi_lb: f64,
    pub kappa: f64,
    pub h: f64,
    pub family_size: usize,
    pub best: usize,
    pub ratios: Vec<PhiRatio>,
    pub skipped: usize,
    pub warnings: Vec<String>,
    pub up_to_constants: bool,
}

/// Lower estimate of `Φ(A)` from the reflection operator over a test family.
pub fn estimate_phi(
    op: &DemoExtensionOperator,
    region: &Region,
    pq: &ExponentPair,
    family: &[TestFunction],
    h: f64,
) -> Result<PhiEstimate> {
    pq.require("phi estimate", false)?;
    let kappa = pq.kappa()?;
    if family.len() < MIN_FAMILY {
        return Err(Error::BudgetTooSmall(format!(
            "test family of {} functions, at least {MIN_FAMILY} required",
            family.len()
        )));
    }
    if region.dim() != 2 {
        return Err(Error::InvalidArgument("the reflection operator is planar".into()));
    }
    if let Some(k) = family
        .iter()
        .position(|f| f.bumps.iter().any(|b| !fits(region, b, h)))
    {
        return Err(Error::InvalidArgument(format!(
            "test function {k} is not supported in the region with margin h"
        )));
    }
    let cells = Cells::new(op, region, h)?;
    let ratios = par::map_slice(family, |f| ratio_on(&cells, op, f, pq, kappa));
    let mut warnings = Vec::new();
    let mut best = None;
    for (k, r) in ratios.iter().enumerate() {
        match r.ratio {
            None => warnings.push(format!("test function {k} skipped: gradient vanishes on A ∩ Ω")),
            Some(v) => {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((k, v));
                }
            }
        }
    }
    let (best, phi_lb) = best.ok_or_else(|| {
        Error::InvalidArgument("every test function vanishes on A ∩ Ω".into())
    })?;
    Ok(PhiEstimate {
        phi_lb,
        kappa,
        h,
        family_size: family.len(),
        best,
        skipped: ratios.iter().filter(|r| r.ratio.is_none()).count(),
        ratios,
        warnings,
        up_to_constants: true,
    })
}

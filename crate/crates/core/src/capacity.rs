//! Discrete variational p-capacity of planar condensers.
//!
//! A condenser is a plate `E`, an open shell `U` and an ambient domain `Ω`.
//! The capacity is the least p-Dirichlet energy over fields on `Ω` equal to
//! 1 on `E` and 0 on `Ω ∖ U`. Fields live on the lattice `(i h, j h)`; each
//! cell contributes `|∇_h f|^p h²` with the forward-difference gradient
//! taken at its lower-left node.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Domain, DomainSpec};
use crate::optim::{self, Objective};
use crate::setfn::ExponentPair;
use crate::{par, Error, Extended, Result};

/// Regularization used whenever `p ≠ 2`: `(|∇f|² + ε²)^{p/2}`.
pub const EPSILON: f64 = 1e-8;

const NONE: u32 = u32::MAX;
const MIN_COARSE_CELLS: f64 = 24.0;
const MAX_LEVELS: usize = 8;

/// JSON form: `{"E":{..},"U":{..},"Omega":{..},"p":2.0}`.
///
/// `E: null` is an explicitly empty plate. A missing `Omega` means the
/// whole plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CondenserSpec {
    #[serde(rename = "E")]
    pub plate: Option<DomainSpec>,
    #[serde(rename = "U")]
    pub shell: DomainSpec,
    #[serde(rename = "Omega", default)]
    pub ambient: Option<DomainSpec>,
    #[serde(default)]
    pub p: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Condenser {
    pub plate: Option<Domain>,
    pub shell: Domain,
    /// `None` is the whole plane.
    pub ambient: Option<Domain>,
}

impl Condenser {
    pub fn new(plate: Option<Domain>, shell: Domain, ambient: Option<Domain>) -> Result<Condenser> {
        let planar = plate.iter().chain(std::iter::once(&shell)).chain(ambient.iter());
        for d in planar {
            if d.dim() != 2 {
                return Err(Error::InvalidArgument(format!(
                    "capacity is planar; got a domain of dimension {}",
                    d.dim()
                )));
            }
        }
        Ok(Condenser { plate, shell, ambient })
    }

    pub fn from_spec(spec: &CondenserSpec) -> Result<Condenser> {
        let plate = spec.plate.as_ref().map(Domain::from_spec).transpose()?;
        let ambient = spec.ambient.as_ref().map(Domain::from_spec).transpose()?;
        Condenser::new(plate, Domain::from_spec(&spec.shell)?, ambient)
    }

    fn in_ambient(&self, x: &[f64]) -> bool {
        self.ambient.as_ref().is_none_or(|a| a.contains(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    /// Solve on coarser lattices first and interpolate upward.
    Multilevel,
    /// Uniform random admissible field on the target lattice.
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy)]
pub struct CapacityOptions {
    pub h: f64,
    /// Relative energy decrease that counts as converged.
    pub tol: f64,
    pub max_iter: usize,
    pub start: Start,
}

impl CapacityOptions {
    pub fn new(h: f64) -> CapacityOptions {
        CapacityOptions {
            h,
            tol: 1e-8,
            max_iter: 200_000,
            start: Start::Multilevel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityResult {
    /// Energy `Σ |∇_h f|^p h²` of the minimizer, `+inf` if inadmissible.
    pub value: Extended,
    /// The minimized energy, regularized when `p ≠ 2`.
    pub regularized: Extended,
    pub p: f64,
    pub h: f64,
    pub epsilon: f64,
    pub iterations: usize,
    pub last_decrement: f64,
    pub converged: bool,
    pub admissible: bool,
    pub free_nodes: usize,
    pub plate_nodes: usize,
    pub levels: usize,
    pub warnings: Vec<String>,
}

/// Minimizing field on the lattice; `NaN` at nodes outside `Ω`.
#[derive(Debug, Clone)]
pub struct CapacityField {
    pub h: f64,
    pub i0: i64,
    pub j0: i64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl CapacityField {
    pub fn position(&self, node: usize) -> [f64; 2] {
        let (i, j) = (node % self.nx, node / self.nx);
        [(self.i0 + i as i64) as f64 * self.h, (self.j0 + j as i64) as f64 * self.h]
    }

    /// Smallest and largest value over nodes in `Ω`.
    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .filter(|v| !v.is_nan())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    fn sample(&self, x: f64, y: f64) -> Option<f64> {
        let u = x / self.h - self.i0 as f64;
        let v = y / self.h - self.j0 as f64;
        if u < 0.0 || v < 0.0 {
            return None;
        }
        let (iu, iv) = (u.floor() as usize, v.floor() as usize);
        let (fu, fv) = (u - iu as f64, v - iv as f64);
        let mut acc = 0.0;
        let mut wsum = 0.0;
        for (di, wi) in [(0, 1.0 - fu), (1, fu)] {
            for (dj, wj) in [(0, 1.0 - fv), (1, fv)] {
                let (i, j) = (iu + di, iv + dj);
                let w = wi * wj;
                if i >= self.nx || j >= self.ny || w <= 0.0 {
                    continue;
                }
                let val = self.values[j * self.nx + i];
                if !val.is_nan() {
                    acc += w * val;
                    wsum += w;
                }
            }
        }
        (wsum > 0.0).then(|| acc / wsum)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Outside,
    Zero,
    One,
    Free,
}

struct Grid {
    h: f64,
    i0: i64,
    j0: i64,
    nx: usize,
    ny: usize,
    kind: Vec<Kind>,
    free_index: Vec<u32>,
    free_nodes: Vec<u32>,
    /// Cell with lower-left corner at the node is part of the energy.
    cell: Vec<bool>,
    conflicts: usize,
    plate_nodes: usize,
}

impl Grid {
    fn build(cond: &Condenser, h: f64) -> Result<Grid> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidArgument(format!("h must be > 0, got {h}")));
        }
        let bbox = cond.shell.bbox();
        let i0 = (bbox.min[0] / h).floor() as i64 - 1;
        let j0 = (bbox.min[1] / h).floor() as i64 - 1;
        let i1 = (bbox.max[0] / h).ceil() as i64 + 1;
        let j1 = (bbox.max[1] / h).ceil() as i64 + 1;
        let nx = (i1 - i0 + 1) as usize;
        let ny = (j1 - j0 + 1) as usize;
        if nx.saturating_mul(ny) > u32::MAX as usize / 2 {
            return Err(Error::BudgetTooSmall(format!("lattice of {nx} x {ny} nodes is too large")));
        }

        let mut kind = vec![Kind::Outside; nx * ny];
        par::for_each_chunk_mut(&mut kind, nx, |j, row| {
            let y = (j0 + j as i64) as f64 * h;
            for (i, k) in row.iter_mut().enumerate() {
                let x = [(i0 + i as i64) as f64 * h, y];
                if !cond.in_ambient(&x) {
                    continue;
                }
                let in_plate = cond.plate.as_ref().is_some_and(|e| e.contains(&x));
                let in_shell = cond.shell.contains(&x);
                *k = match (in_plate, in_shell) {
                    (true, _) => Kind::One,
                    (false, true) => Kind::Free,
                    (false, false) => Kind::Zero,
                };
            }
        });
        // A plate node outside the shell would have to be both 0 and 1.
        let conflicts = par::sum_indexed(ny, |j| {
            let y = (j0 + j as i64) as f64 * h;
            (0..nx)
                .filter(|&i| {
                    kind[j * nx + i] == Kind::One
                        && !cond.shell.contains(&[(i0 + i as i64) as f64 * h, y])
                })
                .count() as f64
        }) as usize;

        let mut free_index = vec![NONE; nx * ny];
        let mut free_nodes = Vec::new();
        for (node, k) in kind.iter().enumerate() {
            if *k == Kind::Free {
                free_index[node] = free_nodes.len() as u32;
                free_nodes.push(node as u32);
            }
        }
        let plate_nodes = kind.iter().filter(|k| **k == Kind::One).count();

        let mut cell = vec![false; nx * ny];
        par::for_each_chunk_mut(&mut cell, nx, |j, row| {
            if j + 1 >= ny {
                return;
            }
            let y = (j0 + j as i64) as f64 * h;
            for (i, c) in row.iter_mut().enumerate().take(nx - 1) {
                let node = j * nx + i;
                if [node, node + 1, node + nx].iter().any(|&v| kind[v] == Kind::Outside) {
                    continue;
                }
                let x = (i0 + i as i64) as f64 * h;
                // Edge midpoints keep cells from bridging slits of Ω.
                *c = cond.in_ambient(&[x + 0.5 * h, y]) && cond.in_ambient(&[x, y + 0.5 * h]);
            }
        });

        Ok(Grid {
            h,
            i0,
            j0,
            nx,
            ny,
            kind,
            free_index,
            free_nodes,
            cell,
            conflicts,
            plate_nodes,
        })
    }

    fn fixed_value(&self, node: usize) -> f64 {
        match self.kind[node] {
            Kind::One => 1.0,
            _ => 0.0,
        }
    }

    fn field(&self, x: &[f64]) -> CapacityField {
        let values = (0..self.nx * self.ny)
            .map(|node| match self.kind[node] {
                Kind::Outside => f64::NAN,
                Kind::Free => x[self.free_index[node] as usize],
                _ => self.fixed_value(node),
            })
            .collect();
        CapacityField {
            h: self.h,
            i0: self.i0,
            j0: self.j0,
            nx: self.nx,
            ny: self.ny,
            values,
        }
    }

    /// Number of 4-connected pieces of the plate.
    fn plate_pieces(&self) -> usize {
        let mut seen = vec![false; self.kind.len()];
        let mut pieces = 0;
        let mut stack = Vec::new();
        for start in 0..self.kind.len() {
            if self.kind[start] != Kind::One || seen[start] {
                continue;
            }
            pieces += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(v) = stack.pop() {
                let (i, j) = (v % self.nx, v / self.nx);
                let mut visit = |w: usize| {
                    if self.kind[w] == Kind::One && !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                };
                if i > 0 {
                    visit(v - 1);
                }
                if i + 1 < self.nx {
                    visit(v + 1);
                }
                if j > 0 {
                    visit(v - self.nx);
                }
                if j + 1 < self.ny {
                    visit(v + self.nx);
                }
            }
        }
        pieces
    }
}

struct Energy<'a> {
    grid: &'a Grid,
    p: f64,
    eps2: f64,
}

impl Energy<'_> {
    #[inline]
    fn at(&self, x: &[f64], node: usize) -> f64 {
        match self.grid.free_index[node] {
            NONE => self.grid.fixed_value(node),
            k => x[k as usize],
        }
    }

    /// Per-cell `[∂e/∂g_x / h, ∂e/∂g_y / h, e]`.
    fn cell_terms(&self, x: &[f64]) -> Vec<[f64; 3]> {
        let g = self.grid;
        let (nx, ny, h) = (g.nx, g.ny, g.h);
        let h2 = h * h;
        let mut terms = vec![[0.0; 3]; nx * ny];
        par::for_each_chunk_mut(&mut terms, nx, |j, row| {
            if j + 1 >= ny {
                return;
            }
            for (i, t) in row.iter_mut().enumerate().take(nx - 1) {
                let c = j * nx + i;
                if !g.cell[c] {
                    continue;
                }
                let f0 = self.at(x, c);
                let gx = (self.at(x, c + 1) - f0) / h;
                let gy = (self.at(x, c + nx) - f0) / h;
                let s = gx * gx + gy * gy + self.eps2;
                let (e, w) = if self.p == 2.0 {
                    (s * h2, 2.0 * h)
                } else {
                    let base = s.powf(0.5 * self.p - 1.0);
                    (base * s * h2, self.p * base * h)
                };
                *t = [w * gx, w * gy, e];
            }
        });
        terms
    }

    fn energy(&self, terms: &[[f64; 3]]) -> f64 {
        let nx = self.grid.nx;
        par::sum_indexed(self.grid.ny, |j| terms[j * nx..(j + 1) * nx].iter().map(|t| t[2]).sum())
    }
}

const GRAD_CHUNK: usize = 4096;

impl Objective for Energy<'_> {
    fn dim(&self) -> usize {
        self.grid.free_nodes.len()
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let terms = self.cell_terms(x);
        let g = self.grid;
        let nx = g.nx;
        par::for_each_chunk_mut(grad, GRAD_CHUNK, |ci, chunk| {
            for (k, out) in chunk.iter_mut().enumerate() {
                let node = g.free_nodes[ci * GRAD_CHUNK + k] as usize;
                let own = terms[node];
                let mut s = -(own[0] + own[1]);
                if node % nx > 0 {
                    s += terms[node - 1][0];
                }
                if node >= nx {
                    s += terms[node - nx][1];
                }
                *out = s;
            }
        });
        self.energy(&terms)
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.energy(&self.cell_terms(x))
    }
}

fn validate(p: f64, opts: &CapacityOptions) -> Result<()> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidArgument(format!("capacity needs p > 1, got {p}")));
    }
    if !(opts.tol.is_finite() && opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be > 0, got {}", opts.tol)));
    }
    if !(opts.h.is_finite() && opts.h > 0.0) {
        return Err(Error::InvalidArgument(format!("h must be > 0, got {}", opts.h)));
    }
    Ok(())
}

fn coarse_levels(cond: &Condenser, h: f64) -> usize {
    let b = cond.shell.bbox();
    let extent = (b.max[0] - b.min[0]).min(b.max[1] - b.min[1]);
    let mut levels = 0;
    while levels < MAX_LEVELS && extent / (h * 2f64.powi(levels as i32 + 1)) >= MIN_COARSE_CELLS {
        levels += 1;
    }
    levels
}

struct LevelSolve {
    grid: Grid,
    x: Vec<f64>,
    outcome: optim::Outcome,
}

fn solve_level(
    cond: &Condenser,
    p: f64,
    h: f64,
    tol: f64,
    max_iter: usize,
    init: Init<'_>,
) -> Result<LevelSolve> {
    let grid = Grid::build(cond, h)?;
    let mut x: Vec<f64> = match init {
        Init::Constant(v) => vec![v; grid.free_nodes.len()],
        Init::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..grid.free_nodes.len()).map(|_| rng.random::<f64>()).collect()
        }
        Init::Coarse(coarse) => grid
            .free_nodes
            .iter()
            .map(|&node| {
                let n = node as usize;
                let (i, j) = (n % grid.nx, n / grid.nx);
                let px = (grid.i0 + i as i64) as f64 * h;
                let py = (grid.j0 + j as i64) as f64 * h;
                coarse.sample(px, py).unwrap_or(0.0).clamp(0.0, 1.0)
            })
            .collect(),
    };
    if grid.conflicts > 0 {
        let outcome = optim::Outcome {
            value: f64::INFINITY,
            iterations: 0,
            last_decrement: 0.0,
            converged: true,
        };
        return Ok(LevelSolve { grid, x, outcome });
    }
    let energy = Energy {
        grid: &grid,
        p,
        eps2: if p == 2.0 { 0.0 } else { EPSILON * EPSILON },
    };
    let opts = optim::Options {
        tol,
        max_iter,
        ..Default::default()
    };
    let outcome = optim::minimize(&energy, &mut x, &opts);
    Ok(LevelSolve { grid, x, outcome })
}

enum Init<'a> {
    Constant(f64),
    Random(u64),
    Coarse(&'a CapacityField),
}

/// Discrete p-capacity of `cond`, with the minimizing field.
///
/// The field is `None` when the condenser has no admissible function.
pub fn p_capacity_field(
    cond: &Condenser,
    p: f64,
    opts: &CapacityOptions,
) -> Result<(CapacityResult, Option<CapacityField>)> {
    validate(p, opts)?;
    let h = opts.h;
    let probe = Grid::build(cond, h)?;
    let mut warnings = Vec::new();
    if cond.plate.is_some() && probe.plate_nodes == 0 {
        return Err(Error::Unresolved(format!("plate contains no lattice node at h = {h}")));
    }
    if probe.plate_pieces() > 1 {
        warnings.push(format!(
            "plate is not connected on the lattice ({} pieces)",
            probe.plate_pieces()
        ));
    }
    let base = CapacityResult {
        value: Extended::ZERO,
        regularized: Extended::ZERO,
        p,
        h,
        epsilon: if p == 2.0 { 0.0 } else { EPSILON },
        iterations: 0,
        last_decrement: 0.0,
        converged: true,
        admissible: true,
        free_nodes: probe.free_nodes.len(),
        plate_nodes: probe.plate_nodes,
        levels: 1,
        warnings,
    };
    if probe.conflicts > 0 {
        let mut r = base;
        r.value = Extended::INFINITY;
        r.regularized = Extended::INFINITY;
        r.admissible = false;
        r.warnings
            .push(format!("{} plate nodes lie in the zero set", probe.conflicts));
        return Ok((r, None));
    }
    if probe.plate_nodes == 0 {
        // The zero field is admissible.
        let x = vec![0.0; probe.free_nodes.len()];
        return Ok((base, Some(probe.field(&x))));
    }
    drop(probe);

    let mut levels = 1;
    let solved = match opts.start {
        Start::Random { seed } => solve_level(cond, p, h, opts.tol, opts.max_iter, Init::Random(seed))?,
        Start::Multilevel => {
            let k = coarse_levels(cond, h);
            let coarse_tol = opts.tol.max(1e-7);
            let mut field: Option<CapacityField> = None;
            for level in (1..=k).rev() {
                let hl = h * 2f64.powi(level as i32);
                let init = match &field {
                    Some(f) => Init::Coarse(f),
                    None => Init::Constant(0.5),
                };
                let s = solve_level(cond, p, hl, coarse_tol, opts.max_iter, init)?;
                field = Some(s.grid.field(&s.x));
                levels += 1;
            }
            let init = match &field {
                Some(f) => Init::Coarse(f),
                None => Init::Constant(0.5),
            };
            solve_level(cond, p, h, opts.tol, opts.max_iter, init)?
        }
    };

    let energy = Energy {
        grid: &solved.grid,
        p,
        eps2: 0.0,
    };
    let raw = energy.value(&solved.x);
    let mut r = base;
    r.value = Extended::new(raw.max(0.0));
    r.regularized = Extended::new(solved.outcome.value.max(0.0));
    r.iterations = solved.outcome.iterations;
    r.last_decrement = solved.outcome.last_decrement;
    r.converged = solved.outcome.converged;
    r.levels = levels;
    if !r.converged {
        r.warnings.push(format!(
            "not converged after {} iterations (last relative decrease {:.3e})",
            r.iterations, r.last_decrement
        ));
    }
    Ok((r, Some(solved.grid.field(&solved.x))))
}

/// Discrete p-capacity of `cond` at spacing `opts.h`.
pub fn p_capacity(cond: &Condenser, p: f64, opts: &CapacityOptions) -> Result<CapacityResult> {
    p_capacity_field(cond, p, opts).map(|(r, _)| r)
}

/// Capacity lower bound `Φ(U) ≥ (cap_q(E,U)^{1/q} / cap_p(E,U∩Ω)^{1/p})^κ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityBound {
    pub phi_lb: Extended,
    pub kappa: f64,
    /// `cap_q(E, U)` relative to the whole plane.
    pub cap_q: CapacityResult,
    /// `cap_p(E, U ∩ Ω)` for fields on `Ω`.
    pub cap_p: CapacityResult,
    /// `cap_p = +inf`: no admissible field on `Ω`, the bound says nothing.
    pub vacuous: bool,
    pub up_to_constants: bool,
}

pub fn capacity_phi_lower_bound(
    omega: &Domain,
    shell: &Domain,
    plate: &Domain,
    pq: &ExponentPair,
    opts: &CapacityOptions,
) -> Result<CapacityBound> {
    pq.require("capacity condition", false)?;
    let kappa = pq.kappa()?;
    let free = Condenser::new(Some(plate.clone()), shell.clone(), None)?;
    let trimmed = Condenser::new(Some(plate.clone()), shell.clone(), Some(omega.clone()))?;
    let cap_q = p_capacity(&free, pq.q, opts)?;
    if !cap_q.admissible {
        return Err(Error::InvalidArgument("plate must lie inside the shell".into()));
    }
    let cap_p = p_capacity(&trimmed, pq.p, opts)?;
    let vacuous = cap_p.value.is_infinite();
    let phi_lb = if vacuous || cap_q.value.value() == 0.0 {
        Extended::ZERO
    } else if cap_p.value.value() == 0.0 {
        Extended::INFINITY
    } else {
        let ratio = cap_q.value.value().powf(1.0 / pq.q) / cap_p.value.value().powf(1.0 / pq.p);
        Extended::new(ratio.powf(kappa))
    };
    Ok(CapacityBound {
        phi_lb,
        kappa,
        cap_q,
        cap_p,
        vacuous,
        up_to_constants: true,
    })
}

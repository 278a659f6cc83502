use crate::geometry::Domain;
use crate::{par, Error, Result};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Neighbourhood used for grid paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stencil {
    #[serde(rename = "8")]
    Eight,
    #[serde(rename = "16")]
    Sixteen,
}

const FORWARD_8: [(i64, i64); 4] = [(1, 0), (0, 1), (1, 1), (1, -1)];
const FORWARD_16: [(i64, i64); 8] = [(1, 0), (0, 1), (1, 1), (1, -1), (1, 2), (2, 1), (2, -1), (1, -2)];

impl Stencil {
    pub fn from_count(n: u32) -> Option<Stencil> {
        match n {
            8 => Some(Stencil::Eight),
            16 => Some(Stencil::Sixteen),
            _ => None,
        }
    }

    pub fn count(self) -> u32 {
        match self {
            Stencil::Eight => 8,
            Stencil::Sixteen => 16,
        }
    }

    /// One offset of each ± pair.
    pub fn forward(self) -> &'static [(i64, i64)] {
        match self {
            Stencil::Eight => &FORWARD_8,
            Stencil::Sixteen => &FORWARD_16,
        }
    }

    /// Offset of adjacency bit `k`: forward offsets first, then their negations.
    pub fn offset(self, k: usize) -> (i64, i64) {
        let f = self.forward();
        if k < f.len() {
            f[k]
        } else {
            let (a, b) = f[k - f.len()];
            (-a, -b)
        }
    }

    /// Worst-case relative overestimate of a straight segment by stencil
    /// paths: `sec(θ/2) - 1`, with θ the widest angle between consecutive
    /// stencil directions (45° for 8 neighbours, atan(1/2) for 16).
    pub fn tolerance(self) -> f64 {
        let gap = match self {
            Stencil::Eight => std::f64::consts::FRAC_PI_4,
            Stencil::Sixteen => 0.5f64.atan(),
        };
        1.0 / (gap / 2.0).cos() - 1.0
    }
}

/// Planar lattice graph of the nodes `(i h, j h)` that lie in a domain.
///
/// Edges join occupied nodes along stencil offsets when the straight segment
/// between them stays in the domain (checked at steps of at most `h/4`).
/// Edge weights are the exact Euclidean offset lengths.
#[derive(Debug, Clone)]
pub struct GridGraph {
    pub(crate) h: f64,
    pub(crate) i0: i64,
    pub(crate) j0: i64,
    pub(crate) nx: usize,
    pub(crate) ny: usize,
    pub(crate) stencil: Stencil,
    pub(crate) occupied: Vec<bool>,
    pub(crate) adj: Vec<u16>,
    weights: Vec<f64>,
    components: Vec<u32>,
    component_count: usize,
    warnings: Vec<String>,
}

impl GridGraph {
    pub fn build(domain: &Domain, h: f64, stencil: Stencil) -> Result<GridGraph> {
        if domain.dim() != 2 {
            return Err(Error::InvalidArgument(format!(
                "grid graphs are planar; domain has dimension {}",
                domain.dim()
            )));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidArgument(format!("h must be > 0, got {h}")));
        }
        let bbox = domain.bbox();
        let i0 = (bbox.min[0] / h).ceil() as i64;
        let i1 = (bbox.max[0] / h).floor() as i64;
        let j0 = (bbox.min[1] / h).ceil() as i64;
        let j1 = (bbox.max[1] / h).floor() as i64;
        if i1 < i0 || j1 < j0 {
            return Err(Error::Unresolved("bounding box smaller than one cell".into()));
        }
        let nx = (i1 - i0 + 1) as usize;
        let ny = (j1 - j0 + 1) as usize;

        let mut occupied = vec![false; nx * ny];
        par::for_each_chunk_mut(&mut occupied, nx, |j, row| {
            let y = (j0 + j as i64) as f64 * h;
            for (i, o) in row.iter_mut().enumerate() {
                *o = domain.contains(&[(i0 + i as i64) as f64 * h, y]);
            }
        });
        let node_count = occupied.iter().filter(|o| **o).count();
        if node_count == 0 {
            return Err(Error::Unresolved(format!("no lattice node lies in the domain at h = {h}")));
        }

        let forward = stencil.forward();
        let fwd_count = forward.len();
        let mut adj = vec![0u16; nx * ny];
        par::for_each_chunk_mut(&mut adj, nx, |j, row| {
            for (i, bits) in row.iter_mut().enumerate() {
                if !occupied[j * nx + i] {
                    continue;
                }
                let a = [(i0 + i as i64) as f64 * h, (j0 + j as i64) as f64 * h];
                for (k, &(di, dj)) in forward.iter().enumerate() {
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0 || nj < 0 || ni >= nx as i64 || nj >= ny as i64 {
                        continue;
                    }
                    if !occupied[nj as usize * nx + ni as usize] {
                        continue;
                    }
                    let b = [a[0] + di as f64 * h, a[1] + dj as f64 * h];
                    if segment_inside(domain, a, b, h / 4.0) {
                        *bits |= 1 << k;
                    }
                }
            }
        });
        // Mirror forward bits into the backward half so adjacency is symmetric.
        for idx in 0..nx * ny {
            let (i, j) = ((idx % nx) as i64, (idx / nx) as i64);
            for (k, &(di, dj)) in forward.iter().enumerate() {
                if adj[idx] & (1 << k) != 0 {
                    let nidx = ((j + dj) as usize) * nx + (i + di) as usize;
                    adj[nidx] |= 1 << (k + fwd_count);
                }
            }
        }
        let weights = (0..2 * fwd_count)
            .map(|k| {
                let (a, b) = stencil.offset(k);
                ((a * a + b * b) as f64).sqrt() * h
            })
            .collect();

        let mut g = GridGraph {
            h,
            i0,
            j0,
            nx,
            ny,
            stencil,
            occupied,
            adj,
            weights,
            components: Vec::new(),
            component_count: 0,
            warnings: Vec::new(),
        };
        g.label_components();
        if domain.metadata().connected == Some(true) && g.component_count > 1 {
            g.warnings.push(format!(
                "domain is connected but the graph has {} components at h = {h}; thin regions are unresolved",
                g.component_count
            ));
        }
        if let Some(alpha) = domain.metadata().cusp_alpha {
            let x_star = h.powf(1.0 / alpha);
            g.warnings.push(format!(
                "cusp horn thinner than h is unresolved for x1 < {x_star:.4}"
            ));
        }
        Ok(g)
    }

    fn label_components(&mut self) {
        let n = self.nx * self.ny;
        let mut comp = vec![u32::MAX; n];
        let mut count = 0u32;
        let mut stack = Vec::new();
        for start in 0..n {
            if !self.occupied[start] || comp[start] != u32::MAX {
                continue;
            }
            comp[start] = count;
            stack.push(start);
            while let Some(u) = stack.pop() {
                self.for_each_neighbor(u, |v, _| {
                    if comp[v] == u32::MAX {
                        comp[v] = count;
                        stack.push(v);
                    }
                });
            }
            count += 1;
        }
        self.components = comp;
        self.component_count = count as usize;
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn stencil(&self) -> Stencil {
        self.stencil
    }

    pub fn node_count(&self) -> usize {
        self.occupied.iter().filter(|o| **o).count()
    }

    pub fn component_count(&self) -> usize {
        self.component_count
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Total lattice slots (occupied or not); node ids range over `0..len()`.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_occupied(&self, node: usize) -> bool {
        self.occupied[node]
    }

    pub fn component(&self, node: usize) -> Option<u32> {
        let c = self.components[node];
        (c != u32::MAX).then_some(c)
    }

    pub fn position(&self, node: usize) -> [f64; 2] {
        let i = self.i0 + (node % self.nx) as i64;
        let j = self.j0 + (node / self.nx) as i64;
        [i as f64 * self.h, j as f64 * self.h]
    }

    pub(crate) fn index(&self, i: i64, j: i64) -> Option<usize> {
        let (li, lj) = (i - self.i0, j - self.j0);
        if li < 0 || lj < 0 || li >= self.nx as i64 || lj >= self.ny as i64 {
            None
        } else {
            Some(lj as usize * self.nx + li as usize)
        }
    }

    pub(crate) fn lattice(&self, node: usize) -> (i64, i64) {
        (self.i0 + (node % self.nx) as i64, self.j0 + (node / self.nx) as i64)
    }

    /// Calls `f(neighbor, weight)` for every edge at `node`.
    pub fn for_each_neighbor(&self, node: usize, mut f: impl FnMut(usize, f64)) {
        let mut bits = self.adj[node];
        let (i, j) = ((node % self.nx) as i64, (node / self.nx) as i64);
        while bits != 0 {
            let k = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let (di, dj) = self.stencil.offset(k);
            f(((j + dj) as usize) * self.nx + (i + di) as usize, self.weights[k]);
        }
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let mut found = false;
        self.for_each_neighbor(u, |w, _| found |= w == v);
        found
    }

    /// Nearest occupied node to `x` and its distance, searching lattice
    /// nodes within `limit`.
    pub fn snap(&self, x: &[f64], limit: f64) -> Result<(usize, f64)> {
        let ci = (x[0] / self.h).round() as i64;
        let cj = (x[1] / self.h).round() as i64;
        let reach = (limit / self.h).ceil() as i64 + 1;
        let mut best: Option<(usize, f64)> = None;
        for j in cj - reach..=cj + reach {
            for i in ci - reach..=ci + reach {
                let Some(idx) = self.index(i, j) else { continue };
                if !self.occupied[idx] {
                    continue;
                }
                let p = self.position(idx);
                let d = ((p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2)).sqrt();
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((idx, d));
                }
            }
        }
        match best {
            Some((idx, d)) if d <= limit => Ok((idx, d)),
            Some((_, d)) => Err(Error::EndpointUnresolved { distance: d, limit }),
            None => Err(Error::EndpointUnresolved {
                distance: f64::INFINITY,
                limit,
            }),
        }
    }

    /// Default snapping radius `2h√n`.
    pub fn snap_limit(&self) -> f64 {
        2.0 * self.h * 2f64.sqrt()
    }

    /// Multi-source shortest-path distances to every node (`+∞` where
    /// unreachable or unoccupied).
    pub fn distances_from(&self, sources: &[usize]) -> Vec<f64> {
        self.dijkstra(sources, &[])
    }

    /// Single-source distances, stopping once every target is settled.
    /// Only target entries are guaranteed final.
    pub fn distances_to_targets(&self, source: usize, targets: &[usize]) -> Vec<f64> {
        self.dijkstra(&[source], targets)
    }

    fn dijkstra(&self, sources: &[usize], targets: &[usize]) -> Vec<f64> {
        let n = self.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            if self.occupied[s] && dist[s] > 0.0 {
                dist[s] = 0.0;
                heap.push(HeapItem { dist: 0.0, node: s });
            }
        }
        let mut is_target = vec![false; if targets.is_empty() { 0 } else { n }];
        let mut remaining = 0usize;
        for &t in targets {
            if !is_target[t] {
                is_target[t] = true;
                remaining += 1;
            }
        }
        while let Some(HeapItem { dist: d, node: u }) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            if !targets.is_empty() && is_target[u] {
                remaining -= 1;
                if remaining == 0 {
                    break;
                }
            }
            self.for_each_neighbor(u, |v, w| {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(HeapItem { dist: nd, node: v });
                }
            });
        }
        dist
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, ties by node id for determinism
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) fn segment_inside(domain: &Domain, a: [f64; 2], b: [f64; 2], step: f64) -> bool {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let m = (len / step).ceil().max(1.0) as usize;
    (1..m).all(|k| {
        let t = k as f64 / m as f64;
        domain.contains(&[a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn stencil_tolerances() {
        assert!((Stencil::Eight.tolerance() - 0.0824).abs() < 1e-4);
        assert!((Stencil::Sixteen.tolerance() - 0.0275).abs() < 1e-4);
        assert!(Stencil::Sixteen.tolerance() <= 0.028);
    }

    #[test]
    fn disc_node_count_and_symmetry() {
        let d = Domain::ball(vec![0.0, 0.0], 1.0).unwrap();
        let g = GridGraph::build(&d, 0.05, Stencil::Eight).unwrap();
        let expected = PI / 0.05f64.powi(2);
        assert!((g.node_count() as f64 - expected).abs() < 0.05 * expected);
        assert_eq!(g.component_count(), 1);
        for u in 0..g.len() {
            g.for_each_neighbor(u, |v, w| {
                assert!(g.has_edge(v, u));
                let (a, b) = (g.position(u), g.position(v));
                let e = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
                assert!(w > 0.0 && (w - e).abs() < 1e-12);
            });
        }
    }

    #[test]
    fn two_balls_two_components() {
        let d = Domain::union(vec![
            crate::geometry::DomainSpec::Ball { center: vec![-1.0, 0.0], radius: 0.5 },
            crate::geometry::DomainSpec::Ball { center: vec![1.0, 0.0], radius: 0.5 },
        ])
        .unwrap();
        let g = GridGraph::build(&d, 0.05, Stencil::Sixteen).unwrap();
        assert_eq!(g.component_count(), 2);
    }

    #[test]
    fn coarse_cusp_drops_the_horn_tip() {
        let d = Domain::cusp(2.0).unwrap();
        let g = GridGraph::build(&d, 0.25, Stencil::Eight).unwrap();
        assert!(g.node_count() > 0);
        // the horn is a single row of nodes and the tip itself is excluded
        assert!(!g.is_occupied(g.index(0, 0).unwrap()));
        assert!(g.is_occupied(g.index(1, 0).unwrap()));
        assert!(!g.is_occupied(g.index(1, 1).unwrap()));
        assert!(!g.warnings().is_empty());
    }

    #[test]
    fn edges_do_not_tunnel_through_slits() {
        // A slit of width h/2 cut out of a box: neighbours across it must not connect.
        let d = Domain::from_spec(&crate::geometry::DomainSpec::Difference {
            base: Box::new(crate::geometry::DomainSpec::Rect { min: vec![0.0, 0.0], max: vec![1.0, 1.0] }),
            subtract: Box::new(crate::geometry::DomainSpec::Rect {
                min: vec![0.49, -1.0],
                max: vec![0.51, 2.0],
            }),
        })
        .unwrap();
        let g = GridGraph::build(&d, 0.05, Stencil::Sixteen).unwrap();
        assert_eq!(g.component_count(), 2);
    }

    #[test]
    fn empty_domain_errors() {
        let d = Domain::ball(vec![0.01, 0.01], 0.001).unwrap();
        assert!(matches!(GridGraph::build(&d, 0.5, Stencil::Eight), Err(Error::Unresolved(_))));
    }
}

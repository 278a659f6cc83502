use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::geometry::{Ball, Domain};
use crate::setfn::ExponentPair;
use crate::{par, Error, Extended, Result};

/// A probe ball with its Φ lower bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeBall {
    pub ball: Ball,
    pub phi_lb: Extended,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    /// `Σ phi_lb` over the probes.
    pub sum: Extended,
    pub kappa: f64,
    /// `(Σ phi_lb)^{1/κ}`.
    pub norm_lb: Extended,
    pub probes: usize,
    pub up_to_constants: bool,
}

/// `‖E‖ ≥ (Σᵢ phi_lb(Bᵢ))^{1/κ}` over pairwise disjoint balls.
pub fn aggregate_norm_lb(probes: &[ProbeBall], pq: &ExponentPair) -> Result<Aggregate> {
    let kappa = pq.kappa()?;
    for i in 0..probes.len() {
        for j in i + 1..probes.len() {
            if !probes[i].ball.is_disjoint(&probes[j].ball) {
                return Err(Error::ProbesNotDisjoint(format!("probes {i} and {j} overlap")));
            }
        }
    }
    let sum = probes.iter().fold(Extended::ZERO, |acc, p| {
        if acc.is_infinite() || p.phi_lb.is_infinite() {
            Extended::INFINITY
        } else {
            Extended::new(acc.value() + p.phi_lb.value())
        }
    });
    let norm_lb = if sum.is_infinite() {
        Extended::INFINITY
    } else {
        Extended::new(sum.value().powf(1.0 / kappa))
    };
    Ok(Aggregate {
        sum,
        kappa,
        norm_lb,
        probes: probes.len(),
        up_to_constants: true,
    })
}

/// Indices of a greedy pairwise disjoint subfamily, taken in input order.
pub fn greedy_disjoint(balls: &[Ball]) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for (i, b) in balls.iter().enumerate() {
        if kept.iter().all(|&k| balls[k].is_disjoint(b)) {
            kept.push(i);
        }
    }
    kept
}

fn unit_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let th = rng.random::<f64>() * std::f64::consts::TAU;
    if n == 2 {
        return vec![th.cos(), th.sin()];
    }
    let z = 2.0 * rng.random::<f64>() - 1.0;
    let s = (1.0 - z * z).sqrt();
    vec![s * th.cos(), s * th.sin(), z]
}

/// Uniform point of the domain by rejection from its bounding box.
pub(crate) fn interior_point(domain: &Domain, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let bb = domain.bbox();
    for _ in 0..100_000 {
        let x: Vec<f64> = (0..domain.dim())
            .map(|d| bb.min[d] + (bb.max[d] - bb.min[d]) * rng.random::<f64>())
            .collect();
        if domain.contains(&x) {
            return Ok(x);
        }
    }
    Err(Error::Unresolved("rejection sampling found no point of the domain".into()))
}

/// Boundary points found by bisection along random rays from interior points.
///
/// Point `k` depends only on `seed` and `k`.
pub fn boundary_points(domain: &Domain, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let bb = domain.bbox();
    let diam = (0..domain.dim())
        .map(|d| (bb.max[d] - bb.min[d]).powi(2))
        .sum::<f64>()
        .sqrt();
    let step = diam / 512.0;
    par::map_indexed(count, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let x = interior_point(domain, &mut rng)?;
        let dir = unit_direction(&mut rng, domain.dim());
        let at = |t: f64| -> Vec<f64> { x.iter().zip(&dir).map(|(a, d)| a + t * d).collect() };
        let mut t_in = 0.0;
        let mut t_out = step;
        while domain.contains(&at(t_out)) {
            t_in = t_out;
            t_out += step;
        }
        for _ in 0..60 {
            let mid = 0.5 * (t_in + t_out);
            if domain.contains(&at(mid)) {
                t_in = mid;
            } else {
                t_out = mid;
            }
        }
        Ok(at(t_in))
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> ExponentPair {
        ExponentPair::new(4.0, 2.0, 2).unwrap()
    }

    fn probe(c: [f64; 2], r: f64, v: f64) -> ProbeBall {
        ProbeBall {
            ball: Ball::new(c.to_vec(), r).unwrap(),
            phi_lb: Extended::finite(v),
        }
    }

    #[test]
    fn single_and_double() {
        let one = aggregate_norm_lb(&[probe([0.0, 0.0], 0.1, 0.5)], &pair()).unwrap();
        assert!((one.norm_lb.value() - 0.5f64.powf(0.25)).abs() < 1e-15);
        let two = aggregate_norm_lb(&[probe([0.0, 0.0], 0.1, 0.5), probe([1.0, 0.0], 0.1, 0.5)], &pair()).unwrap();
        assert!((two.norm_lb.value() - 1.0).abs() < 1e-15);
        assert!(two.norm_lb > one.norm_lb);
    }

    #[test]
    fn overlap_rejected() {
        let r = aggregate_norm_lb(&[probe([0.0, 0.0], 0.5, 1.0), probe([0.5, 0.0], 0.5, 1.0)], &pair());
        assert!(matches!(r, Err(Error::ProbesNotDisjoint(_))));
    }

    #[test]
    fn packing_is_disjoint() {
        let balls: Vec<Ball> = (0..20)
            .map(|k| Ball::new(vec![0.1 * k as f64, 0.0], 0.12).unwrap())
            .collect();
        let kept = greedy_disjoint(&balls);
        assert_eq!(kept, vec![0, 3, 6, 9, 12, 15, 18]);
    }

    #[test]
    fn boundary_points_lie_on_boundary() {
        let d = Domain::ball(vec![0.0, 0.0], 1.0).unwrap();
        let pts = boundary_points(&d, 50, 4).unwrap();
        for p in pts {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((r - 1.0).abs() < 1e-9, "{r}");
        }
    }
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::aggregate::{aggregate_norm_lb, boundary_points, greedy_disjoint, interior_point, ProbeBall};
use super::density::density_phi_lb;
use super::metric::metric_phi_lb_on;
use crate::capacity::{capacity_phi_lower_bound, CapacityOptions};
use crate::geometry::{Ball, Domain, Method};
use crate::metric::{GridGraph, Stencil};
use crate::setfn::ExponentPair;
use crate::{par, Error, Extended, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionId {
    Density,
    Metric,
    Capacity,
}

impl ConditionId {
    pub fn parse(s: &str) -> Option<ConditionId> {
        match s {
            "density" => Some(ConditionId::Density),
            "metric" => Some(ConditionId::Metric),
            "capacity" => Some(ConditionId::Capacity),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ConditionId::Density => "density",
            ConditionId::Metric => "metric",
            ConditionId::Capacity => "capacity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measure {
    pub name: &'static str,
    pub value: Extended,
}

fn measure(name: &'static str, value: f64) -> Measure {
    Measure {
        name,
        value: Extended::new(value),
    }
}

/// One probe: a ball (density, capacity) or a pair (metric).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRecord {
    pub index: usize,
    pub center: Vec<f64>,
    /// Probe radius; for pairs, the intrinsic distance `R`.
    pub radius: Extended,
    /// Second point of a metric pair.
    pub partner: Option<Vec<f64>>,
    /// Condition-specific quantities, same names in every record.
    pub measured: Vec<Measure>,
    pub phi_lb: Option<Extended>,
    pub in_aggregate: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub condition: ConditionId,
    pub p: f64,
    pub q: f64,
    pub n: usize,
    pub kappa: Option<f64>,
    pub seed: u64,
    pub probes: Vec<ProbeRecord>,
    /// Sum of `phi_lb` over the disjoint subfamily marked `in_aggregate`.
    pub aggregate_phi_lb: Option<Extended>,
    /// `(aggregate_phi_lb)^{1/κ}`.
    pub norm_lb: Option<Extended>,
    pub up_to_constants: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct CheckOptions {
    pub probes: usize,
    /// Probe ball radius, or pair separation for the metric check.
    pub radius: f64,
    /// Monte Carlo samples per volume (density check).
    pub samples: u64,
    /// Grid spacing for metric and capacity; `radius/16` and `radius/32`
    /// when unset.
    pub h: Option<f64>,
    pub stencil: Stencil,
    pub seed: u64,
}

impl CheckOptions {
    pub fn new(probes: usize, seed: u64) -> CheckOptions {
        CheckOptions {
            probes,
            radius: 0.05,
            samples: 100_000,
            h: None,
            stencil: Stencil::Sixteen,
            seed,
        }
    }
}

pub fn check(domain: &Domain, pq: &ExponentPair, condition: ConditionId, opts: &CheckOptions) -> Result<ConditionReport> {
    if opts.probes == 0 {
        return Err(Error::InvalidArgument("at least one probe required".into()));
    }
    if !(opts.radius.is_finite() && opts.radius > 0.0 && opts.radius < 1.0) {
        return Err(Error::InvalidArgument(format!("probe radius must be in (0, 1), got {}", opts.radius)));
    }
    if pq.n != domain.dim() {
        return Err(Error::InvalidArgument(format!(
            "pair has n = {}, domain has dimension {}",
            pq.n,
            domain.dim()
        )));
    }
    match condition {
        ConditionId::Density => check_density(domain, pq, opts),
        ConditionId::Metric => check_metric(domain, pq, opts),
        ConditionId::Capacity => check_capacity(domain, pq, opts),
    }
}

/// Marks a greedy disjoint subfamily of the eligible probes and sums it.
fn finish(
    condition: ConditionId,
    pq: &ExponentPair,
    opts: &CheckOptions,
    mut probes: Vec<ProbeRecord>,
    eligible: Vec<bool>,
    mut warnings: Vec<String>,
) -> Result<ConditionReport> {
    let kappa = pq.kappa().ok();
    let mut aggregate_phi_lb = None;
    let mut norm_lb = None;
    if kappa.is_some() {
        let candidates: Vec<usize> = (0..probes.len())
            .filter(|&k| eligible[k] && probes[k].radius.is_finite() && probes[k].phi_lb.is_some())
            .collect();
        let balls: Vec<Ball> = candidates
            .iter()
            .map(|&k| Ball::new(probes[k].center.clone(), probes[k].radius.value()))
            .collect::<Result<_>>()?;
        let kept = greedy_disjoint(&balls);
        let family: Vec<ProbeBall> = kept
            .iter()
            .map(|&i| ProbeBall {
                ball: balls[i].clone(),
                phi_lb: probes[candidates[i]].phi_lb.unwrap_or(Extended::ZERO),
            })
            .collect();
        for &i in &kept {
            probes[candidates[i]].in_aggregate = true;
        }
        // An eligible probe with an infinite bound settles the aggregate alone.
        let infinite = (0..probes.len())
            .any(|k| eligible[k] && probes[k].phi_lb.is_some_and(|v| v.is_infinite()));
        if infinite {
            aggregate_phi_lb = Some(Extended::INFINITY);
            norm_lb = Some(Extended::INFINITY);
            warnings.push("a probe reports an infinite bound: no extension at these exponents, constants aside".into());
        } else if !family.is_empty() {
            let agg = aggregate_norm_lb(&family, pq)?;
            aggregate_phi_lb = Some(agg.sum);
            norm_lb = Some(agg.norm_lb);
        }
    }
    Ok(ConditionReport {
        condition,
        p: pq.p,
        q: pq.q,
        n: pq.n,
        kappa,
        seed: opts.seed,
        probes,
        aggregate_phi_lb,
        norm_lb,
        up_to_constants: true,
        warnings,
    })
}

fn check_density(domain: &Domain, pq: &ExponentPair, opts: &CheckOptions) -> Result<ConditionReport> {
    pq.require(super::density::DENSITY, true)?;
    let centers = boundary_points(domain, opts.probes, opts.seed)?;
    let mut probes = Vec::new();
    let mut eligible = Vec::new();
    for (k, c) in centers.into_iter().enumerate() {
        let ball = Ball::new(c, opts.radius)?;
        let method = Method::MonteCarlo { samples: opts.samples };
        let d = density_phi_lb(domain, &ball, pq, method, par::sub_seed(opts.seed, k as u64))?;
        eligible.push(d.center_in_closure);
        probes.push(ProbeRecord {
            index: k,
            center: d.center.clone(),
            radius: Extended::new(d.radius),
            partner: None,
            measured: vec![
                measure("ball_volume", d.ball_volume),
                measure("intersection", d.intersection.value),
                measure("stderr", d.intersection.stderr),
            ],
            phi_lb: Some(d.phi_lb),
            in_aggregate: false,
            note: d.warnings.first().cloned(),
        });
    }
    finish(ConditionId::Density, pq, opts, probes, eligible, Vec::new())
}

const UNREACHABLE: &str = "unreachable pair";

fn check_metric(domain: &Domain, pq: &ExponentPair, opts: &CheckOptions) -> Result<ConditionReport> {
    if pq.q <= pq.n as f64 {
        return Err(Error::Hypothesis {
            check: super::metric::METRIC,
            detail: format!("needs q > n, got q={}, n={}", pq.q, pq.n),
        });
    }
    let h = opts.h.unwrap_or(opts.radius / 16.0);
    let graph = GridGraph::build(domain, h, opts.stencil)?;
    let mut warnings: Vec<String> = graph.warnings().to_vec();
    // Pairs at separation `radius` with both ends in the domain.
    let pairs = par::map_indexed(opts.probes, |k| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(k as u64);
        for _ in 0..1000 {
            let x = interior_point(domain, &mut rng)?;
            let th = rand::Rng::random::<f64>(&mut rng) * std::f64::consts::TAU;
            let y = vec![x[0] + opts.radius * th.cos(), x[1] + opts.radius * th.sin()];
            if domain.contains(&y) {
                return Ok((x, y));
            }
        }
        Err(Error::Unresolved("no pair at the requested separation fits in the domain".into()))
    });
    let mut probes = Vec::new();
    let mut eligible = Vec::new();
    for (k, pair) in pairs.into_iter().enumerate() {
        let (x, y) = pair?;
        let (phi_lb, radius, measured, note) = match metric_phi_lb_on(&graph, &x, &y, pq) {
            Ok(m) => {
                let mut measured = vec![
                    Measure { name: "d_omega", value: m.report.d_omega },
                    measure("d_euclid", m.report.d_euclid),
                    Measure { name: "ratio", value: m.report.ratio },
                ];
                if let Some(raw) = m.raw_ratio {
                    measured.push(Measure { name: "raw_ratio", value: raw });
                }
                let note = (!m.report.reachable).then(|| UNREACHABLE.to_string());
                (m.phi_lb.or(m.raw_ratio), m.ball_radius, measured, note)
            }
            Err(e @ Error::EndpointUnresolved { .. }) => {
                warnings.push(format!("probe {k}: {e}"));
                let measured = vec![
                    Measure { name: "d_omega", value: Extended::INFINITY },
                    measure("d_euclid", crate::geometry::dist(&x, &y)),
                    Measure { name: "ratio", value: Extended::INFINITY },
                ];
                (None, Extended::INFINITY, measured, Some(e.to_string()))
            }
            Err(e) => return Err(e),
        };
        // With q = p the record carries the raw ratio, which is not a Φ bound.
        let resolved = note.is_none() || note.as_deref() == Some(UNREACHABLE);
        eligible.push(pq.q < pq.p && resolved);
        probes.push(ProbeRecord {
            index: k,
            center: x,
            radius,
            partner: Some(y),
            measured,
            phi_lb,
            in_aggregate: false,
            note,
        });
    }
    if probes.iter().any(|p| p.note.as_deref() == Some(UNREACHABLE)) {
        warnings.push("some pairs are not joined by a path in the domain".into());
    }
    finish(ConditionId::Metric, pq, opts, probes, eligible, warnings)
}

fn check_capacity(domain: &Domain, pq: &ExponentPair, opts: &CheckOptions) -> Result<ConditionReport> {
    if domain.dim() != 2 {
        return Err(Error::InvalidArgument("capacity probes are planar".into()));
    }
    pq.require("capacity condition", false)?;
    let h = opts.h.unwrap_or(opts.radius / 32.0);
    let centers = boundary_points(domain, opts.probes, opts.seed)?;
    let mut probes = Vec::new();
    let mut eligible = Vec::new();
    let mut warnings = Vec::new();
    for (k, c) in centers.into_iter().enumerate() {
        let shell = Domain::ball(c.clone(), opts.radius)?;
        let plate = Domain::ball(c.clone(), 0.25 * opts.radius)?;
        let copts = CapacityOptions::new(h);
        let (phi_lb, measured, note) = match capacity_phi_lower_bound(domain, &shell, &plate, pq, &copts) {
            Ok(b) => {
                let note = if !(b.cap_q.converged && b.cap_p.converged) {
                    warnings.push(format!("probe {k}: capacity solve did not converge"));
                    Some("not converged".to_string())
                } else if b.vacuous {
                    Some("vacuous: no admissible field on the domain".to_string())
                } else {
                    None
                };
                let measured = vec![
                    Measure { name: "cap_q", value: b.cap_q.value },
                    Measure { name: "cap_p", value: b.cap_p.value },
                ];
                (Some(b.phi_lb), measured, note)
            }
            Err(e @ Error::Unresolved(_)) => {
                warnings.push(format!("probe {k}: {e}"));
                let measured = vec![
                    Measure { name: "cap_q", value: Extended::ZERO },
                    Measure { name: "cap_p", value: Extended::ZERO },
                ];
                (None, measured, Some(e.to_string()))
            }
            Err(e) => return Err(e),
        };
        eligible.push(phi_lb.is_some() && note.as_deref() != Some("not converged"));
        probes.push(ProbeRecord {
            index: k,
            center: c,
            radius: Extended::new(opts.radius),
            partner: None,
            measured,
            phi_lb,
            in_aggregate: false,
            note,
        });
    }
    finish(ConditionId::Capacity, pq, opts, probes, eligible, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convex_domain_all_finite() {
        let d = Domain::rect(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let pq = ExponentPair::new(6.0, 4.0, 2).unwrap();
        let mut opts = CheckOptions::new(6, 11);
        opts.radius = 0.1;
        opts.samples = 20_000;
        for c in [ConditionId::Density, ConditionId::Metric, ConditionId::Capacity] {
            let r = check(&d, &pq, c, &opts).unwrap();
            assert!(r.up_to_constants);
            assert!(r.probes.iter().all(|p| p.phi_lb.is_some_and(|v| v.is_finite())), "{c:?}: {r:?}");
            let agg = r.norm_lb.unwrap();
            assert!(agg.is_finite() && agg.value() > 0.0);
            assert!(r.probes.iter().any(|p| p.in_aggregate));
        }
    }

    #[test]
    fn deterministic() {
        let d = Domain::cusp(2.0).unwrap();
        let pq = ExponentPair::new(6.0, 4.0, 2).unwrap();
        let mut opts = CheckOptions::new(4, 5);
        opts.samples = 10_000;
        let a = check(&d, &pq, ConditionId::Density, &opts).unwrap();
        let b = check(&d, &pq, ConditionId::Density, &opts).unwrap();
        assert_eq!(a, b);
    }
}

use serde::Serialize;

use crate::geometry::Domain;
use crate::metric::{GridGraph, MetricReport, Stencil};
use crate::setfn::ExponentPair;
use crate::{Error, Extended, Result};

pub(crate) const METRIC: &str = "metric equivalence";

#[derive(Debug, Clone, Serialize)]
pub struct MetricProbe {
    pub report: MetricReport,
    /// `(d_Ω^{1−n/p} / |x−y|^{1−n/q})^κ` for `q < p`.
    pub phi_lb: Option<Extended>,
    /// `d_Ω^{1−n/p} / |x−y|^{1−n/p}` when `q = p`.
    pub raw_ratio: Option<Extended>,
    pub kappa: Option<f64>,
    /// Radius `R = d_Ω(x, y)` of the ball `B(x, R)` the bound applies to.
    pub ball_radius: Extended,
}

fn validate(pq: &ExponentPair, x: &[f64], y: &[f64]) -> Result<()> {
    if pq.n != 2 {
        return Err(Error::InvalidArgument(format!(
            "metric probes are planar, got n = {}",
            pq.n
        )));
    }
    if pq.q <= pq.n as f64 {
        return Err(Error::Hypothesis {
            check: METRIC,
            detail: format!("needs q > n, got q={}, n={}", pq.q, pq.n),
        });
    }
    let e = crate::geometry::dist(x, y);
    if !(e > 0.0 && e < 1.0) {
        return Err(Error::Hypothesis {
            check: METRIC,
            detail: format!("needs 0 < |x−y| < 1, got {e}"),
        });
    }
    Ok(())
}

/// Metric lower bound on a prebuilt graph.
pub fn metric_phi_lb_on(graph: &GridGraph, x: &[f64], y: &[f64], pq: &ExponentPair) -> Result<MetricProbe> {
    validate(pq, x, y)?;
    let report = graph.intrinsic_distance(x, y)?;
    let n = pq.n as f64;
    let a = 1.0 - n / pq.p;
    let e = report.d_euclid;
    let d = report.d_omega;
    if pq.q == pq.p {
        let raw = if d.is_infinite() {
            Extended::INFINITY
        } else {
            Extended::new((d.value() / e).powf(a))
        };
        return Ok(MetricProbe {
            report,
            phi_lb: None,
            raw_ratio: Some(raw),
            kappa: None,
            ball_radius: d,
        });
    }
    let kappa = pq.kappa()?;
    let b = 1.0 - n / pq.q;
    let phi = if d.is_infinite() {
        Extended::INFINITY
    } else {
        Extended::new((kappa * (a * d.value().ln() - b * e.ln())).exp())
    };
    Ok(MetricProbe {
        report,
        phi_lb: Some(phi),
        raw_ratio: None,
        kappa: Some(kappa),
        ball_radius: d,
    })
}

/// Metric lower bound `Φ(B(x,R)) ≥ (d_Ω^{1−n/p} / |x−y|^{1−n/q})^κ`.
pub fn metric_phi_lb(
    domain: &Domain,
    x: &[f64],
    y: &[f64],
    pq: &ExponentPair,
    h: f64,
    stencil: Stencil,
) -> Result<MetricProbe> {
    validate(pq, x, y)?;
    let graph = GridGraph::build(domain, h, stencil)?;
    metric_phi_lb_on(&graph, x, y, pq)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Domain {
        Domain::rect(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn convex_equal_exponents_ratio_near_one() {
        let pq = ExponentPair::new(4.0, 4.0, 2).unwrap();
        let m = metric_phi_lb(&square(), &[0.25, 0.5], &[0.75, 0.5], &pq, 1.0 / 64.0, Stencil::Sixteen).unwrap();
        assert!(m.phi_lb.is_none());
        assert!((m.raw_ratio.unwrap().value() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn convex_bound_is_distance_to_the_n() {
        let pq = ExponentPair::new(6.0, 4.0, 2).unwrap();
        let m = metric_phi_lb(&square(), &[0.25, 0.5], &[0.75, 0.5], &pq, 1.0 / 64.0, Stencil::Sixteen).unwrap();
        assert!((m.phi_lb.unwrap().value() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn unreachable_pair_is_infinite() {
        let d = Domain::union(vec![
            crate::geometry::DomainSpec::Ball { center: vec![0.0, 0.0], radius: 0.3 },
            crate::geometry::DomainSpec::Ball { center: vec![0.8, 0.0], radius: 0.3 },
        ])
        .unwrap();
        let pq = ExponentPair::new(6.0, 4.0, 2).unwrap();
        let m = metric_phi_lb(&d, &[0.0, 0.0], &[0.8, 0.0], &pq, 1.0 / 64.0, Stencil::Eight).unwrap();
        assert!(m.phi_lb.unwrap().is_infinite());
        assert!(!m.report.reachable);
    }

    #[test]
    fn guards() {
        let pq = ExponentPair::new(6.0, 2.0, 2).unwrap();
        assert!(matches!(
            metric_phi_lb(&square(), &[0.2, 0.2], &[0.4, 0.4], &pq, 0.05, Stencil::Eight),
            Err(Error::Hypothesis { .. })
        ));
        let pq = ExponentPair::new(6.0, 4.0, 2).unwrap();
        let wide = Domain::rect(vec![0.0, 0.0], vec![3.0, 1.0]).unwrap();
        assert!(metric_phi_lb(&wide, &[0.2, 0.5], &[2.2, 0.5], &pq, 0.05, Stencil::Eight).is_err());
    }
}

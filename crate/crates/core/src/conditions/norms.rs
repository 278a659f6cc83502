use serde::Serialize;

use crate::geometry::{density_ratio, Domain, Method};
use crate::metric::{GridGraph, Stencil};
use crate::setfn::{lalpha_norm, ExponentPair};
use crate::{fit, par, Error, Extended, Result};

const K_BOUND: &str = "K norm bound";
const M_BOUND: &str = "M norm bound";

/// Centers of the lattice cells of side `spacing` that lie in the domain.
pub fn cell_centers(domain: &Domain, spacing: f64) -> Result<Vec<Vec<f64>>> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::InvalidArgument(format!("spacing must be > 0, got {spacing}")));
    }
    let bb = domain.bbox();
    let n = domain.dim();
    let lo: Vec<i64> = (0..n).map(|d| (bb.min[d] / spacing).floor() as i64).collect();
    let counts: Vec<usize> = (0..n)
        .map(|d| ((bb.max[d] / spacing).ceil() as i64 - lo[d]).max(0) as usize)
        .collect();
    let total: usize = counts.iter().product();
    if total > 50_000_000 {
        return Err(Error::BudgetTooSmall(format!("{total} cells at spacing {spacing}")));
    }
    let rows = par::map_indexed(total / counts[0].max(1), |row| {
        let mut idx = vec![0usize; n];
        let mut rest = row;
        for d in 1..n {
            idx[d] = rest % counts[d];
            rest /= counts[d];
        }
        (0..counts[0])
            .filter_map(|i| {
                idx[0] = i;
                let x: Vec<f64> = (0..n)
                    .map(|d| (lo[d] + idx[d] as i64) as f64 * spacing + 0.5 * spacing)
                    .collect();
                domain.contains(&x).then_some(x)
            })
            .collect::<Vec<_>>()
    });
    Ok(rows.into_iter().flatten().collect())
}

/// A norm lower bound for `‖E‖` at one scale.
#[derive(Debug, Clone, Serialize)]
pub struct NormBound {
    /// `"K"` or `"M"`.
    pub field: &'static str,
    pub r: f64,
    pub alpha: f64,
    /// Power applied to the norm: `1/p` for `K`, `1 − n/q` for `M`.
    pub power: f64,
    pub norm: Extended,
    pub lb: Extended,
    /// For `M`: the same bound from the minimal ratio near each point.
    pub inf_variant_lb: Option<Extended>,
    pub spacing: f64,
    pub samples: usize,
    pub skipped: usize,
    /// Sample points whose field value is `+inf`.
    pub infinite_at: Vec<Vec<f64>>,
    pub up_to_constants: bool,
    pub warnings: Vec<String>,
}

/// `‖E‖ ≥ ‖K_r‖_{L_α(Ω)}^{1/p}` with `α = q/(p−q)`, sampling `K_r` at cell
/// centers of spacing `spacing`.
pub fn norm_lb_from_k(
    domain: &Domain,
    pq: &ExponentPair,
    r: f64,
    spacing: f64,
    method: Method,
    seed: u64,
) -> Result<NormBound> {
    pq.require(K_BOUND, true)?;
    if pq.n != domain.dim() {
        return Err(Error::InvalidArgument("dimension of the pair and the domain differ".into()));
    }
    let alpha = pq.reg_alpha()?;
    let points = cell_centers(domain, spacing)?;
    if points.is_empty() {
        return Err(Error::Unresolved(format!("no cell center in the domain at spacing {spacing}")));
    }
    let values = par::map_indexed(points.len(), |k| {
        density_ratio(domain, &points[k], r, method, par::sub_seed(seed, k as u64)).map(|d| d.ratio)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let norm = lalpha_norm(&values, spacing.powi(pq.n as i32), alpha)?;
    let power = 1.0 / pq.p;
    Ok(NormBound {
        field: "K",
        r,
        alpha,
        power,
        lb: pow_ext(norm.value, power),
        norm: norm.value,
        inf_variant_lb: None,
        spacing,
        samples: points.len(),
        skipped: 0,
        infinite_at: norm.infinite_at.iter().map(|&k| points[k].clone()).collect(),
        up_to_constants: true,
        warnings: Vec::new(),
    })
}

fn pow_ext(v: Extended, power: f64) -> Extended {
    if v.is_infinite() {
        Extended::INFINITY
    } else {
        Extended::new(v.value().powf(power))
    }
}

/// Grid and sampling parameters for [`norm_lb_from_m`].
#[derive(Debug, Clone, Copy)]
pub struct MSampling {
    /// Spacing of the sample points.
    pub spacing: f64,
    /// Graph spacing for intrinsic distances.
    pub h: f64,
    pub stencil: Stencil,
    pub directions: usize,
}

/// `‖E‖ ≥ ‖M_r‖_{L_α(Ω)}^{1−n/q}` with `α = (pq − pn)/(p−q)`, using the
/// supremal ratio for `M_r`; the minimal-ratio variant is reported too.
pub fn norm_lb_from_m(domain: &Domain, pq: &ExponentPair, r: f64, sampling: &MSampling) -> Result<NormBound> {
    pq.require(M_BOUND, true)?;
    if pq.n != 2 || domain.dim() != 2 {
        return Err(Error::InvalidArgument("M is computed on planar domains".into()));
    }
    let alpha = pq.m_alpha()?;
    if !alpha.feasible {
        return Err(Error::Hypothesis {
            check: M_BOUND,
            detail: format!("exponent {} is not positive", alpha.value),
        });
    }
    let graph = GridGraph::build(domain, sampling.h, sampling.stencil)?;
    let points = cell_centers(domain, sampling.spacing)?;
    let scales = par::map_slice(&points, |x| graph.m_at_scale(domain, x, r, sampling.directions));
    let mut sup = Vec::new();
    let mut inf = Vec::new();
    let mut used = Vec::new();
    let mut skipped = 0;
    for (x, s) in points.iter().zip(scales) {
        match s {
            Ok(m) => {
                sup.push(m.sup);
                inf.push(m.inf);
                used.push(x.clone());
            }
            Err(Error::ScaleUnresolved(_) | Error::EndpointUnresolved { .. }) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if sup.is_empty() {
        return Err(Error::ScaleUnresolved(format!(
            "no sample point resolves scale {r} at graph spacing {}",
            sampling.h
        )));
    }
    let cell = sampling.spacing * sampling.spacing;
    let norm_sup = lalpha_norm(&sup, cell, alpha.value)?;
    let norm_inf = lalpha_norm(&inf, cell, alpha.value)?;
    let power = 1.0 - pq.n as f64 / pq.q;
    let mut warnings = Vec::new();
    if skipped > 0 {
        warnings.push(format!("{skipped} sample points skipped: scale or endpoint unresolved"));
    }
    warnings.extend(graph.warnings().iter().cloned());
    Ok(NormBound {
        field: "M",
        r,
        alpha: alpha.value,
        power,
        lb: pow_ext(norm_sup.value, power),
        norm: norm_sup.value,
        inf_variant_lb: Some(pow_ext(norm_inf.value, power)),
        spacing: sampling.spacing,
        samples: used.len(),
        skipped,
        infinite_at: norm_sup.infinite_at.iter().map(|&k| used[k].clone()).collect(),
        up_to_constants: true,
        warnings,
    })
}

/// Log-log slope of the bound against `r` over several scales.
pub fn norm_trend(bounds: &[NormBound]) -> Option<f64> {
    if bounds.iter().any(|b| b.lb.is_infinite()) {
        return None;
    }
    let rs: Vec<f64> = bounds.iter().map(|b| b.r).collect();
    let lbs: Vec<f64> = bounds.iter().map(|b| b.lb.value()).collect();
    fit::loglog_slope(&rs, &lbs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;

    fn square() -> Domain {
        Domain::rect(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn k_bound_on_unit_square_is_one() {
        let pq = ExponentPair::new(6.0, 4.0, 2).unwrap();
        let b = norm_lb_from_k(&square(), &pq, 1e-3, 1.0 / 32.0, Method::MonteCarlo { samples: 4_000 }, 3).unwrap();
        assert_eq!(b.samples, 32 * 32);
        assert!((b.lb.value() - 1.0).abs() < 1e-4, "{b:?}");
    }

    #[test]
    fn m_bound_on_unit_square_is_near_one() {
        let pq = ExponentPair::new(6.0, 4.0, 2).unwrap();
        let s = MSampling {
            spacing: 1.0 / 16.0,
            h: 1.0 / 128.0,
            stencil: Stencil::Sixteen,
            directions: 16,
        };
        let b = norm_lb_from_m(&square(), &pq, 0.05, &s).unwrap();
        assert!(b.lb.value() >= 1.0 - 1e-9);
        assert!(b.lb.value() <= (1.0 + Stencil::Sixteen.tolerance()).powf(0.5) + 0.02, "{b:?}");
    }

    #[test]
    fn m_bound_exceeds_one_on_l_domain() {
        // L-shape of unit area.
        let a = 1.0 / 0.75f64.sqrt();
        let b = 0.5 * a;
        let l = Domain::from_spec(&DomainSpec::Polygon {
            vertices: vec![[0.0, 0.0], [a, 0.0], [a, b], [b, b], [b, a], [0.0, a]],
        })
        .unwrap();
        let pq = ExponentPair::new(6.0, 4.0, 2).unwrap();
        let s = MSampling {
            spacing: 1.0 / 32.0,
            h: 1.0 / 256.0,
            stencil: Stencil::Sixteen,
            directions: 32,
        };
        let lb = norm_lb_from_m(&l, &pq, 0.2, &s).unwrap();
        assert!(lb.lb.value() > 1.0, "{lb:?}");
        assert!(lb.inf_variant_lb.unwrap().value() <= lb.lb.value());
    }

    #[test]
    fn disconnected_domain_is_infinite() {
        let d = Domain::union(vec![
            DomainSpec::Rect { min: vec![0.0, 0.0], max: vec![0.5, 1.0] },
            DomainSpec::Rect { min: vec![0.55, 0.0], max: vec![1.0, 1.0] },
        ])
        .unwrap();
        let pq = ExponentPair::new(6.0, 4.0, 2).unwrap();
        let s = MSampling {
            spacing: 1.0 / 8.0,
            h: 1.0 / 64.0,
            stencil: Stencil::Eight,
            directions: 16,
        };
        let b = norm_lb_from_m(&d, &pq, 0.2, &s).unwrap();
        assert!(b.lb.is_infinite());
        assert!(!b.infinite_at.is_empty());
    }

    #[test]
    fn guards() {
        let pq = ExponentPair::new(6.0, 2.0, 2).unwrap();
        let m = Method::MonteCarlo { samples: 1000 };
        assert!(matches!(norm_lb_from_k(&square(), &pq, 0.1, 0.1, m, 0), Err(Error::Hypothesis { .. })));
        let pq = ExponentPair::new(4.0, 4.0, 2).unwrap();
        assert!(norm_lb_from_k(&square(), &pq, 0.1, 0.1, m, 0).is_err());
    }
}

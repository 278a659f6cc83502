use super::{ball_intersection_volume, Ball, Domain, Method, VolumeEstimate};
use crate::{fit, par, Error, Extended, Result};
use serde::Serialize;

/// Fitted log-log slopes of `K(x, r)` below this value flag divergence.
pub const DIVERGENCE_SLOPE: f64 = -0.1;

/// Fixed-scale density quotient `K(x,r) = |B(x,r)| / |B(x,r) ∩ Ω|`.
#[derive(Debug, Clone, Serialize)]
pub struct DensityRatio {
    pub ratio: Extended,
    pub ball_volume: f64,
    pub intersection: VolumeEstimate,
    /// Set when the intersection estimate cannot be separated from zero;
    /// `ratio` is then the `+∞` marker.
    pub infinite_flag: bool,
}

pub fn density_ratio(
    domain: &Domain,
    x: &[f64],
    r: f64,
    method: Method,
    seed: u64,
) -> Result<DensityRatio> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("point must be finite".into()));
    }
    let ball = Ball::new(x.to_vec(), r)?;
    let intersection = ball_intersection_volume(domain, &ball, method, seed)?;
    let ball_volume = ball.volume();
    let infinite_flag = intersection.value <= 0.0 || intersection.indistinguishable_from_zero;
    let ratio = if infinite_flag {
        Extended::INFINITY
    } else {
        Extended::finite((ball_volume / intersection.value).max(1.0))
    };
    Ok(DensityRatio {
        ratio,
        ball_volume,
        intersection,
        infinite_flag,
    })
}

/// Dyadic sequence `K(x, r₀ 2⁻ᵏ)` and its fitted power-law exponent.
#[derive(Debug, Clone, Serialize)]
pub struct LimsupReport {
    pub radii: Vec<f64>,
    pub ratios: Vec<Extended>,
    /// Least-squares slope of `log K` against `log r`; `None` when any
    /// ratio is infinite.
    pub slope: Option<f64>,
    /// `slope < DIVERGENCE_SLOPE`, or an infinite ratio.
    pub diverging: bool,
    /// Ratio at the smallest radius.
    pub smallest_scale_ratio: Extended,
}

pub fn limsup_density(
    domain: &Domain,
    x: &[f64],
    r0: f64,
    levels: usize,
    method: Method,
    seed: u64,
) -> Result<LimsupReport> {
    if levels < 4 {
        return Err(Error::InvalidArgument(format!("levels must be >= 4, got {levels}")));
    }
    let radii: Vec<f64> = (0..levels).map(|k| r0 * 0.5f64.powi(k as i32)).collect();
    let ratios = par::map_slice(&radii, |&r| {
        let level = (r0 / r).log2().round() as u64;
        density_ratio(domain, x, r, method, par::sub_seed(seed, level)).map(|d| d.ratio)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let finite: Option<Vec<f64>> = ratios.iter().map(|r| r.as_finite()).collect();
    let slope = finite.and_then(|k| fit::loglog_slope(&radii, &k));
    let diverging = slope.is_none_or(|s| s < DIVERGENCE_SLOPE);
    Ok(LimsupReport {
        smallest_scale_ratio: *ratios.last().unwrap(),
        radii,
        ratios,
        slope,
        diverging,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MC: Method = Method::MonteCarlo { samples: 20_000 };

    #[test]
    fn interior_point_has_unit_ratio() {
        let d = Domain::cusp(2.0).unwrap();
        let k = density_ratio(&d, &[2.0, 0.0], 0.05, MC, 1).unwrap();
        let rel = k.intersection.stderr / k.intersection.value;
        assert!((k.ratio.value() - 1.0).abs() <= 2.0 * rel + 1e-12, "{k:?}");
        assert!(rel < 1e-5);
    }

    #[test]
    fn half_plane_boundary_halves_the_ball() {
        let d = Domain::rect(vec![-1.0, 0.0], vec![1.0, 1.0]).unwrap();
        let rep = limsup_density(&d, &[0.0, 0.0], 0.1, 5, MC, 1).unwrap();
        for k in &rep.ratios {
            assert!((k.value() - 2.0).abs() < 1e-3, "{rep:?}");
        }
        assert!(rep.slope.unwrap().abs() < 0.01);
        assert!(!rep.diverging);
        // rejection sampling agrees within its own error bar
        let rej = density_ratio(&d, &[0.0, 0.0], 0.1, Method::Rejection { samples: 100_000 }, 2)
            .unwrap();
        let rel = rej.intersection.stderr / rej.intersection.value;
        assert!((rej.ratio.value() - 2.0).abs() < 2.0 * 2.0 * rel, "{rej:?}");
    }

    #[test]
    fn disjoint_ball_gives_infinite_marker() {
        let d = Domain::cusp(2.0).unwrap();
        let k = density_ratio(&d, &[-1.0, 0.0], 0.1, MC, 1).unwrap();
        assert!(k.ratio.is_infinite());
        assert!(k.infinite_flag);
        let rep = limsup_density(&d, &[-1.0, 0.0], 0.1, 4, MC, 1).unwrap();
        assert!(rep.diverging && rep.slope.is_none());
    }

    #[test]
    fn too_few_levels_rejected() {
        let d = Domain::cusp(2.0).unwrap();
        assert!(limsup_density(&d, &[0.0, 0.0], 0.1, 3, MC, 1).is_err());
        assert!(density_ratio(&d, &[0.0, 0.0], 0.0, MC, 1).is_err());
    }
}

use serde::Serialize;

use crate::geometry::{ball_intersection_volume, Ball, Domain, Method, VolumeEstimate, DIVERGENCE_SLOPE};
use crate::setfn::ExponentPair;
use crate::{fit, par, Error, Extended, Result};

pub(crate) const DENSITY: &str = "density condition";

/// `(|B|^p / |B∩Ω|^q)^{1/(p−q)}` without exponent guards; `+inf` when the
/// intersection cannot be separated from zero.
pub fn density_phi_raw(ball_volume: f64, intersection: &VolumeEstimate, p: f64, q: f64) -> Extended {
    if intersection.value <= 0.0 || intersection.indistinguishable_from_zero {
        return Extended::INFINITY;
    }
    let log = (p * ball_volume.ln() - q * intersection.value.ln()) / (p - q);
    Extended::new(log.exp())
}

/// True if some point within `r·2⁻⁴` of `x` along one of 64 rays lies in `Ω`.
pub(crate) fn near_closure(domain: &Domain, x: &[f64], r: f64) -> bool {
    if domain.contains(x) {
        return true;
    }
    let n = x.len();
    (4..=24).any(|k| {
        let t = r * 2f64.powi(-k);
        (0..64).any(|m| {
            let th = std::f64::consts::TAU * m as f64 / 64.0;
            let mut y = x.to_vec();
            y[0] += t * th.cos();
            y[1] += t * th.sin();
            if n == 3 {
                // Also probe off the plane.
                let mut z = y.clone();
                z[2] += t;
                return domain.contains(&y) || domain.contains(&z);
            }
            domain.contains(&y)
        })
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityProbe {
    pub center: Vec<f64>,
    pub radius: f64,
    pub ball_volume: f64,
    pub intersection: VolumeEstimate,
    pub phi_lb: Extended,
    /// Whether the center was found in `Ω̄`; probes outside are flagged.
    pub center_in_closure: bool,
    pub warnings: Vec<String>,
}

/// Density lower bound `Φ(B) ≥ (|B|^p / |B∩Ω|^q)^{1/(p−q)}`.
pub fn density_phi_lb(
    domain: &Domain,
    ball: &Ball,
    pq: &ExponentPair,
    method: Method,
    seed: u64,
) -> Result<DensityProbe> {
    pq.require(DENSITY, true)?;
    if pq.n != domain.dim() || ball.dim() != domain.dim() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: pair n={}, domain n={}, ball n={}",
            pq.n,
            domain.dim(),
            ball.dim()
        )));
    }
    if ball.radius >= 1.0 {
        return Err(Error::Hypothesis {
            check: DENSITY,
            detail: format!("needs r < 1, got {}", ball.radius),
        });
    }
    let intersection = ball_intersection_volume(domain, ball, method, seed)?;
    let ball_volume = ball.volume();
    let phi_lb = density_phi_raw(ball_volume, &intersection, pq.p, pq.q);
    let center_in_closure = near_closure(domain, &ball.center, ball.radius);
    let mut warnings = Vec::new();
    if !center_in_closure {
        warnings.push(format!("center {:?} appears to lie outside the closure of the domain", ball.center));
    }
    Ok(DensityProbe {
        center: ball.center.clone(),
        radius: ball.radius,
        ball_volume,
        intersection,
        phi_lb,
        center_in_closure,
        warnings,
    })
}

/// `r = 2⁻ᵏ` for `k` in `k_min..=k_max`.
pub fn dyadic_radii(k_min: i32, k_max: i32) -> Vec<f64> {
    (k_min..=k_max).map(|k| 2f64.powi(-k)).collect()
}

/// Density lower bounds over shrinking balls at one center.
#[derive(Debug, Clone, Serialize)]
pub struct DensityTrend {
    pub center: Vec<f64>,
    pub p: f64,
    pub q: f64,
    pub radii: Vec<f64>,
    pub phi_lb: Vec<Extended>,
    pub intersections: Vec<VolumeEstimate>,
    /// Least-squares slope of `log phi_lb` against `log r`.
    pub slope: Option<f64>,
    /// Slope at least [`DIVERGENCE_SLOPE`] with every value finite.
    pub bounded: bool,
    /// `n < q < p`; the trend is computed either way.
    pub hypotheses_hold: bool,
}

/// Trend of the density bound as `r → 0`.
///
/// Unlike [`density_phi_lb`] this accepts any `1 ≤ q < p`: the power law of
/// the bound in `r` is meaningful beyond the range where the bound itself
/// is asserted.
pub fn density_trend(
    domain: &Domain,
    center: &[f64],
    radii: &[f64],
    p: f64,
    q: f64,
    method: Method,
    seed: u64,
) -> Result<DensityTrend> {
    let pq = ExponentPair::new(p, q, domain.dim())?;
    if q >= p {
        return Err(Error::Hypothesis {
            check: DENSITY,
            detail: format!("needs q < p, got p={p}, q={q}"),
        });
    }
    if radii.len() < 2 {
        return Err(Error::InvalidArgument("a trend needs at least two radii".into()));
    }
    let mut phi_lb = Vec::with_capacity(radii.len());
    let mut intersections = Vec::with_capacity(radii.len());
    for (k, &r) in radii.iter().enumerate() {
        let ball = Ball::new(center.to_vec(), r)?;
        let v = ball_intersection_volume(domain, &ball, method, par::sub_seed(seed, k as u64))?;
        phi_lb.push(density_phi_raw(ball.volume(), &v, p, q));
        intersections.push(v);
    }
    let slope = if phi_lb.iter().all(|v| v.is_finite()) {
        let ys: Vec<f64> = phi_lb.iter().map(|v| v.value()).collect();
        fit::loglog_slope(radii, &ys)
    } else {
        None
    };
    Ok(DensityTrend {
        center: center.to_vec(),
        p,
        q,
        radii: radii.to_vec(),
        phi_lb,
        intersections,
        slope,
        bounded: slope.is_some_and(|s| s >= DIVERGENCE_SLOPE),
        hypotheses_hold: pq.require(DENSITY, true).is_ok(),
    })
}

use super::{BBox, Ball, Domain};
use crate::par;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Smallest Monte Carlo budget accepted.
pub const MIN_SAMPLES: u64 = 1000;

/// Normal quantile for the reported 95% half-widths.
const Z95: f64 = 1.96;

/// How `|B ∩ Ω|` is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Method {
    /// Monte Carlo; uses exact vertical sections when the domain provides
    /// them, otherwise stratified rejection sampling.
    MonteCarlo { samples: u64 },
    /// Stratified rejection sampling in the ball's bounding cube, always.
    Rejection { samples: u64 },
    /// Midpoint rule on cells of side at most `h`.
    Grid { h: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodTag {
    MonteCarlo,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    /// Hit counting in the bounding cube, 95% binomial half-width.
    Rejection,
    /// Stratified sampling of `θ`, `x₁ = c₁ + r sin θ`, with the `x₂`-section measured exactly;
    /// half-width from paired samples per stratum.
    Sectioned,
    /// Cell counting; error is the heuristic `surface(B)·h`.
    Cells,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeEstimate {
    pub value: f64,
    /// 95% half-width (Monte Carlo) or heuristic error bound (grid).
    pub stderr: f64,
    pub method: MethodTag,
    pub sampler: Sampler,
    /// Samples actually drawn (Monte Carlo) or cell side (grid).
    pub samples_or_h: f64,
    pub seed: u64,
    /// Zero hits, or an estimate not separated from zero by its half-width.
    pub indistinguishable_from_zero: bool,
    pub heuristic_error: bool,
}

/// Estimates `|B ∩ Ω|`. Deterministic in `seed`.
pub fn ball_intersection_volume(
    domain: &Domain,
    ball: &Ball,
    method: Method,
    seed: u64,
) -> Result<VolumeEstimate> {
    let n = domain.dim();
    if !(2..=3).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "volume sampling supports n in {{2, 3}}, got {n}"
        )));
    }
    if ball.dim() != n {
        return Err(Error::InvalidArgument(format!(
            "ball dimension {} does not match domain dimension {n}",
            ball.dim()
        )));
    }
    let mut est = match method {
        Method::MonteCarlo { samples } | Method::Rejection { samples } => {
            if samples < MIN_SAMPLES {
                return Err(Error::BudgetTooSmall(format!(
                    "{samples} samples requested, at least {MIN_SAMPLES} required"
                )));
            }
            let sectioned = matches!(method, Method::MonteCarlo { .. }) && domain.has_sections();
            if sectioned {
                sectioned_volume(domain, ball, samples, seed)
            } else {
                rejection_volume(domain, ball, samples, seed)
            }
        }
        Method::Grid { h } => {
            if !(h > 0.0 && h <= ball.radius / 8.0) {
                return Err(Error::BudgetTooSmall(format!(
                    "grid spacing {h} must satisfy 0 < h <= radius/8 = {}",
                    ball.radius / 8.0
                )));
            }
            grid_volume(domain, ball, h, seed)
        }
    };
    est.value = est.value.min(ball.volume());
    Ok(est)
}

/// Strata per axis and samples per stratum for a budget of `samples`.
fn strata_layout(n: usize, samples: u64) -> (u64, u64) {
    let per_axis = ((samples as f64 / 8.0).powf(1.0 / n as f64).floor() as u64).clamp(1, 128);
    let strata = per_axis.pow(n as u32);
    (per_axis, (samples / strata).max(1))
}

fn stratum_corner(bbox: &BBox, per_axis: u64, mut s: u64, widths: &[f64], out: &mut [f64]) {
    for (d, o) in out.iter_mut().enumerate() {
        let idx = s % per_axis;
        s /= per_axis;
        *o = bbox.min[d] + idx as f64 * widths[d];
    }
}

fn rejection_volume(domain: &Domain, ball: &Ball, samples: u64, seed: u64) -> VolumeEstimate {
    let n = ball.dim();
    let cube = ball.bbox();
    let (per_axis, k) = strata_layout(n, samples);
    let strata = per_axis.pow(n as u32);
    let widths: Vec<f64> = (0..n).map(|d| (cube.max[d] - cube.min[d]) / per_axis as f64).collect();
    let hits_per_stratum = par::map_indexed(strata as usize, |s| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(s as u64);
        let mut corner = [0.0; 3];
        let mut x = [0.0; 3];
        stratum_corner(&cube, per_axis, s as u64, &widths, &mut corner[..n]);
        let mut hits = 0u64;
        for _ in 0..k {
            for d in 0..n {
                x[d] = corner[d] + widths[d] * rng.random::<f64>();
            }
            if ball.contains(&x[..n]) && domain.contains(&x[..n]) {
                hits += 1;
            }
        }
        hits
    });
    let hits: u64 = hits_per_stratum.iter().sum();
    let used = strata * k;
    let vol = cube.volume();
    let phat = hits as f64 / used as f64;
    let value = vol * phat;
    let stderr = if hits == 0 {
        // rule of three
        3.0 * vol / used as f64
    } else {
        Z95 * vol * (phat * (1.0 - phat) / used as f64).sqrt()
    };
    VolumeEstimate {
        value,
        stderr,
        method: MethodTag::MonteCarlo,
        sampler: Sampler::Rejection,
        samples_or_h: used as f64,
        seed,
        indistinguishable_from_zero: hits == 0 || value <= stderr,
        heuristic_error: false,
    }
}

const SECTION_BATCH: u64 = 1024;

/// Stratified in `θ` with `x₁ = c₁ + r sin θ`: the Jacobian `r cos θ`
/// cancels the square-root edge of the chord, so strata near the ends of the
/// ball stay resolved at small radii.
fn sectioned_volume(domain: &Domain, ball: &Ball, samples: u64, seed: u64) -> VolumeEstimate {
    let (c1, c2, r) = (ball.center[0], ball.center[1], ball.radius);
    let strata = (samples / 2).max(1);
    let width = std::f64::consts::PI / strata as f64;
    let batches = strata.div_ceil(SECTION_BATCH);
    let weighted_section = |th: f64| -> f64 {
        let x1 = c1 + r * th.sin();
        let half = r * th.cos();
        if half <= 0.0 {
            return 0.0;
        }
        let chord = super::IntervalSet::interval(c2 - half, c2 + half);
        let len = domain
            .section(x1)
            .expect("sectioned sampler requires sections")
            .intersect(&chord)
            .measure();
        len * half
    };
    let parts = par::map_indexed(batches as usize, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let lo = b as u64 * SECTION_BATCH;
        let hi = (lo + SECTION_BATCH).min(strata);
        let (mut value, mut var) = (0.0, 0.0);
        for s in lo..hi {
            let left = -std::f64::consts::FRAC_PI_2 + s as f64 * width;
            let l1 = weighted_section(left + width * rng.random::<f64>());
            let l2 = weighted_section(left + width * rng.random::<f64>());
            value += width * 0.5 * (l1 + l2);
            var += width * width * (l1 - l2) * (l1 - l2) / 4.0;
        }
        (value, var)
    });
    let value: f64 = parts.iter().map(|p| p.0).sum();
    let var: f64 = parts.iter().map(|p| p.1).sum();
    let stderr = Z95 * var.sqrt();
    VolumeEstimate {
        value,
        stderr,
        method: MethodTag::MonteCarlo,
        sampler: Sampler::Sectioned,
        samples_or_h: (2 * strata) as f64,
        seed,
        indistinguishable_from_zero: value <= 0.0 || (stderr > 0.0 && value <= stderr),
        heuristic_error: false,
    }
}

fn grid_volume(domain: &Domain, ball: &Ball, h: f64, seed: u64) -> VolumeEstimate {
    let n = ball.dim();
    let cube = ball.bbox();
    let m = (2.0 * ball.radius / h).ceil() as usize;
    let h = 2.0 * ball.radius / m as f64;
    let inner = m.pow(n as u32 - 1);
    let counts = par::map_indexed(m, |i| {
        let mut x = [0.0; 3];
        x[0] = cube.min[0] + (i as f64 + 0.5) * h;
        let mut count = 0u64;
        for mut j in 0..inner {
            for d in 1..n {
                x[d] = cube.min[d] + ((j % m) as f64 + 0.5) * h;
                j /= m;
            }
            if ball.contains(&x[..n]) && domain.contains(&x[..n]) {
                count += 1;
            }
        }
        count
    });
    let count: u64 = counts.iter().sum();
    let value = count as f64 * h.powi(n as i32);
    let surface = n as f64 * super::unit_ball_volume(n) * ball.radius.powi(n as i32 - 1);
    let stderr = surface * h;
    VolumeEstimate {
        value,
        stderr,
        method: MethodTag::Grid,
        sampler: Sampler::Cells,
        samples_or_h: h,
        seed,
        indistinguishable_from_zero: count == 0,
        heuristic_error: true,
    }
}

/// Result of [`integrate_box`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxIntegral {
    pub value: f64,
    /// 95% half-width from within-stratum sample variances.
    pub stderr: f64,
    pub samples: u64,
}

/// Stratified Monte Carlo estimate of `∫_bbox f`.
pub fn integrate_box<F>(bbox: &BBox, f: F, samples: u64, seed: u64) -> Result<BoxIntegral>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let n = bbox.dim();
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidArgument(format!("integration supports n <= 3, got {n}")));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::BudgetTooSmall(format!(
            "{samples} samples requested, at least {MIN_SAMPLES} required"
        )));
    }
    let (per_axis, k) = strata_layout(n, samples);
    let k = k.max(2);
    let strata = per_axis.pow(n as u32);
    let widths: Vec<f64> = (0..n).map(|d| (bbox.max[d] - bbox.min[d]) / per_axis as f64).collect();
    let cell_vol: f64 = widths.iter().product();
    let parts = par::map_indexed(strata as usize, |s| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(s as u64);
        let mut corner = [0.0; 3];
        let mut x = [0.0; 3];
        stratum_corner(bbox, per_axis, s as u64, &widths, &mut corner[..n]);
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for _ in 0..k {
            for d in 0..n {
                x[d] = corner[d] + widths[d] * rng.random::<f64>();
            }
            let v = f(&x[..n]);
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / k as f64;
        let s2 = ((sumsq - k as f64 * mean * mean) / (k - 1) as f64).max(0.0);
        (cell_vol * mean, cell_vol * cell_vol * s2 / k as f64)
    });
    let value = parts.iter().map(|p| p.0).sum();
    let var: f64 = parts.iter().map(|p| p.1).sum();
    Ok(BoxIntegral {
        value,
        stderr: Z95 * var.sqrt(),
        samples: strata * k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn mc(samples: u64) -> Method {
        Method::MonteCarlo { samples }
    }

    #[test]
    fn ball_inside_cusp_disc() {
        let d = Domain::cusp(2.0).unwrap();
        let b = Ball::new(vec![2.0, 0.0], 0.1).unwrap();
        for method in [mc(10_000), Method::Rejection { samples: 100_000 }, Method::Grid { h: 0.001 }] {
            let e = ball_intersection_volume(&d, &b, method, 3).unwrap();
            let tol = e.stderr.max(1e-12) * 2.0 + 1e-4;
            assert!((e.value - PI * 0.01).abs() <= tol, "{method:?}: {e:?}");
        }
    }

    #[test]
    fn disjoint_ball_is_zero() {
        let d = Domain::cusp(2.0).unwrap();
        let b = Ball::new(vec![-1.0, 0.0], 0.1).unwrap();
        for method in [mc(10_000), Method::Rejection { samples: 10_000 }, Method::Grid { h: 0.01 }] {
            let e = ball_intersection_volume(&d, &b, method, 3).unwrap();
            assert_eq!(e.value, 0.0);
            assert!(e.indistinguishable_from_zero);
        }
    }

    #[test]
    fn budget_checks() {
        let d = Domain::cusp(2.0).unwrap();
        let b = Ball::new(vec![2.0, 0.0], 0.1).unwrap();
        assert!(matches!(
            ball_intersection_volume(&d, &b, mc(999), 0),
            Err(Error::BudgetTooSmall(_))
        ));
        assert!(matches!(
            ball_intersection_volume(&d, &b, Method::Grid { h: 0.02 }, 0),
            Err(Error::BudgetTooSmall(_))
        ));
        let b3 = Ball::new(vec![0.0, 0.0, 0.0], 0.1).unwrap();
        assert!(ball_intersection_volume(&d, &b3, mc(1000), 0).is_err());
    }

    #[test]
    fn three_dimensional_ball_in_box() {
        let d = Domain::rect(vec![0.0; 3], vec![1.0; 3]).unwrap();
        let b = Ball::new(vec![0.0, 0.5, 0.5], 0.2).unwrap();
        let e = ball_intersection_volume(&d, &b, mc(200_000), 11).unwrap();
        let exact = 0.5 * 4.0 / 3.0 * PI * 0.008;
        assert!((e.value - exact).abs() < 2.0 * e.stderr, "{e:?} vs {exact}");
        assert_eq!(e.sampler, Sampler::Rejection);
    }

    #[test]
    fn seed_determinism() {
        let d = Domain::implicit("x^2 + y^2 < 1", vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let b = Ball::new(vec![0.9, 0.0], 0.3).unwrap();
        let a = ball_intersection_volume(&d, &b, mc(50_000), 42).unwrap();
        let c = ball_intersection_volume(&d, &b, mc(50_000), 42).unwrap();
        assert_eq!(a.value.to_bits(), c.value.to_bits());
        let other = ball_intersection_volume(&d, &b, mc(50_000), 43).unwrap();
        assert_ne!(a.value.to_bits(), other.value.to_bits());
    }

    #[test]
    fn box_integral_of_constant_is_exact() {
        let bbox = BBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let r = integrate_box(&bbox, |_| 1.0, 10_000, 1).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert_eq!(r.stderr, 0.0);
        let lin = integrate_box(&bbox, |x| x[0] + x[1], 10_000, 1).unwrap();
        assert!((lin.value - 1.0).abs() < 2.0 * lin.stderr + 1e-9);
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sobolev_gauge::geometry::{BBox, Ball};
use sobolev_gauge::setfn::{
    estimate_phi, phi_ratio, random_family, AdditiveSetFunction, Bump, DemoExtensionOperator,
    ExponentPair, Generator, Region, TestFunction,
};
use std::f64::consts::PI;
use std::sync::Arc;

fn random_generator(rng: &mut ChaCha8Rng) -> Generator {
    let c = [rng.random_range(0.5..3.5), rng.random_range(0.5..3.5)];
    if rng.random::<bool>() {
        Generator::Ball(Ball::new(c.to_vec(), rng.random_range(0.1..0.6)).unwrap())
    } else {
        let (w, h) = (rng.random_range(0.1..0.6), rng.random_range(0.1..0.6));
        Generator::Rect(BBox::new(vec![c[0] - w, c[1] - h], vec![c[0] + w, c[1] + h]).unwrap())
    }
}

fn disjoint_pair(rng: &mut ChaCha8Rng) -> (Generator, Generator) {
    loop {
        let a = random_generator(rng);
        let b = random_generator(rng);
        if a.is_disjoint(&b) {
            return (a, b);
        }
    }
}

/// A generator strictly inside `g`.
fn nested_inside(g: &Generator, rng: &mut ChaCha8Rng) -> Generator {
    let bb = g.bbox();
    let c: Vec<f64> = (0..2).map(|d| 0.5 * (bb.min[d] + bb.max[d])).collect();
    let half = (0..2).map(|d| 0.5 * (bb.max[d] - bb.min[d])).fold(f64::INFINITY, f64::min);
    let r = half * rng.random_range(0.2..0.6);
    if rng.random::<bool>() {
        Generator::Ball(Ball::new(c, r).unwrap())
    } else {
        let s = r / 2f64.sqrt();
        Generator::Rect(BBox::new(vec![c[0] - s, c[1] - s], vec![c[0] + s, c[1] + s]).unwrap())
    }
}

fn region(parts: &[&Generator]) -> Region {
    Region::new(parts.iter().map(|g| (*g).clone()).collect()).unwrap()
}

#[test]
fn additivity_and_monotonicity_randomized() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..100 {
        let (a, b) = disjoint_pair(&mut rng);
        let inner = nested_inside(&a, &mut rng);
        let (c0, c1, c2) = (
            rng.random_range(0.5..2.0),
            rng.random_range(-0.2..0.2),
            rng.random_range(-0.2..0.2),
        );
        let rate = Arc::new(move |x: &[f64]| c0 + c1 * x[0] + c2 * x[1] * x[1]);
        let phi = AdditiveSetFunction::density(rate, 20_000);
        let seed = case as u64;
        let va = phi.evaluate(&region(&[&a]), seed).unwrap();
        let vb = phi.evaluate(&region(&[&b]), seed + 1000).unwrap();
        let vab = phi.evaluate(&region(&[&a, &b]), seed + 2000).unwrap();
        let vi = phi.evaluate(&region(&[&inner]), seed + 3000).unwrap();
        let slack = 2.0 * (va.stderr.powi(2) + vb.stderr.powi(2) + vab.stderr.powi(2)).sqrt();
        assert!(
            (vab.value - va.value - vb.value).abs() <= slack,
            "case {case}: {vab:?} vs {va:?} + {vb:?}"
        );
        assert!(vi.value <= va.value + 2.0 * (vi.stderr + va.stderr), "case {case}");
        assert!(va.value <= vab.value + 2.0 * (va.stderr + vab.stderr), "case {case}");

        let values = [rng.random_range(0.0..5.0), rng.random_range(0.0..5.0)];
        let atoms = AdditiveSetFunction::atomic(vec![a.clone(), b.clone()], values.to_vec()).unwrap();
        let ta = atoms.evaluate(&region(&[&a]), 0).unwrap();
        let tb = atoms.evaluate(&region(&[&b]), 0).unwrap();
        let tab = atoms.evaluate(&region(&[&a, &b]), 0).unwrap();
        assert!(ta.exact && tab.exact);
        assert_eq!(tab.value, ta.value + tb.value, "case {case}");
        assert!(ta.value <= tab.value);
    }
}

fn op() -> DemoExtensionOperator {
    DemoExtensionOperator::new([-4.0, 4.0], 4.0).unwrap()
}

#[test]
fn phi_estimate_monotone_in_region_and_family() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let h = 1.0 / 64.0;
    for case in 0..20 {
        let outer_r = rng.random_range(0.4..0.8);
        let outer_c = [rng.random_range(-1.0..1.0), rng.random_range(0.0..0.6)];
        let inner_r = outer_r * rng.random_range(0.4..0.7);
        // Keep the inner center in Ω so some test function sees A ∩ Ω.
        let inner_c = loop {
            let shift = (outer_r - inner_r) * rng.random_range(0.0..0.9);
            let ang = rng.random_range(0.0..2.0 * PI);
            let c = [outer_c[0] + shift * ang.cos(), outer_c[1] + shift * ang.sin()];
            if c[1] > 0.05 {
                break c;
            }
        };
        let a1 = Region::ball(Ball::new(inner_c.to_vec(), inner_r).unwrap());
        let a2 = Region::ball(Ball::new(outer_c.to_vec(), outer_r).unwrap());
        let p = rng.random_range(3.0..8.0);
        let q = rng.random_range(1.2..p - 0.5);
        let pq = ExponentPair::new(p, q, 2).unwrap();

        let fam1 = random_family(&a1, 80, h, case).unwrap();
        let mut fam2 = fam1.clone();
        fam2.extend(random_family(&a2, 30, h, case + 500).unwrap());

        let small = estimate_phi(&op(), &a1, &pq, &fam1[..50], h).unwrap();
        let e1 = estimate_phi(&op(), &a1, &pq, &fam1, h).unwrap();
        let e2 = estimate_phi(&op(), &a2, &pq, &fam2, h).unwrap();
        assert!(small.phi_lb <= e1.phi_lb, "case {case}: family");
        assert!(e1.phi_lb <= e2.phi_lb, "case {case}: {} > {}", e1.phi_lb, e2.phi_lb);
    }
}

#[test]
fn super_additive_on_disjoint_regions() {
    let h = 1.0 / 64.0;
    let pq = ExponentPair::new(6.0, 3.0, 2).unwrap();
    let kappa = pq.kappa().unwrap();
    let a1 = Region::ball(Ball::new(vec![-1.0, 0.1], 0.6).unwrap());
    let a2 = Region::ball(Ball::new(vec![1.0, 0.1], 0.6).unwrap());
    let fam1 = random_family(&a1, 60, h, 1).unwrap();
    let fam2 = random_family(&a2, 60, h, 2).unwrap();
    let e1 = estimate_phi(&op(), &a1, &pq, &fam1, h).unwrap();
    let e2 = estimate_phi(&op(), &a2, &pq, &fam2, h).unwrap();

    // g = Σ s_k f_k with ‖∇(s_k f_k)‖_p^p = Φ_k gives ratio^κ = Σ Φ_k.
    let scaled = |e: &sobolev_gauge::setfn::PhiEstimate, fam: &[TestFunction]| {
        let best = &e.ratios[e.best];
        (e.phi_lb.powf(1.0 / pq.p) / best.source_norm, fam[e.best].clone())
    };
    let (s1, f1) = scaled(&e1, &fam1);
    let (s2, f2) = scaled(&e2, &fam2);
    let g = TestFunction::combine(&[(s1, &f1), (s2, &f2)]);
    let union = a1.union(&a2).unwrap();
    let mut fam = fam1.clone();
    fam.extend(fam2.iter().cloned());
    fam.push(g);
    let eu = estimate_phi(&op(), &union, &pq, &fam, h).unwrap();
    let sum = e1.phi_lb + e2.phi_lb;
    assert!(eu.phi_lb >= (1.0 - 0.05) * sum, "{} vs {sum}", eu.phi_lb);
    assert!(kappa > 0.0);
}

/// `‖∇f‖_s` of the radial bump `(1 − r²/w²)²` by Simpson's rule.
fn bump_gradient_norm(w: f64, s: f64) -> f64 {
    let n = 20_000;
    let dr = w / n as f64;
    let g = |r: f64| {
        let d = 4.0 * r / (w * w) * (1.0 - r * r / (w * w));
        2.0 * PI * d.powf(s) * r
    };
    let mut sum = g(0.0) + g(w);
    for k in 1..n {
        sum += g(k as f64 * dr) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    (sum * dr / 3.0).powf(1.0 / s)
}

#[test]
fn discrete_norms_match_continuum() {
    let a = Region::ball(Ball::new(vec![0.0, 1.0], 0.5).unwrap());
    let f = TestFunction {
        bumps: vec![Bump {
            center: [0.0, 1.0],
            width: 0.3,
            amplitude: 1.0,
            poly: [1.0, 0.0, 0.0],
        }],
    };
    let pq = ExponentPair::new(4.0, 2.0, 2).unwrap();
    let r = phi_ratio(&op(), &a, &pq, &f, 1.0 / 256.0).unwrap();
    let nq = bump_gradient_norm(0.3, 2.0);
    let np = bump_gradient_norm(0.3, 4.0);
    assert!((r.extended_norm / nq - 1.0).abs() < 0.01, "{} vs {nq}", r.extended_norm);
    assert!((r.source_norm / np - 1.0).abs() < 0.01, "{} vs {np}", r.source_norm);
}

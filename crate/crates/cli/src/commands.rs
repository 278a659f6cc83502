use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use sobolev_gauge::capacity::{p_capacity, CapacityOptions, Condenser, CondenserSpec, Start};
use sobolev_gauge::conditions::{
    admissible_region, check, norm_lb_from_k, norm_lb_from_m, norm_trend, CheckOptions, MSampling,
};
use sobolev_gauge::geometry::{ball_intersection_volume, density_ratio, limsup_density, Ball, Domain, Method};
use sobolev_gauge::metric::{vaisala_test_function, GridGraph, Stencil};
use sobolev_gauge::setfn::{estimate_phi, random_family, DemoExtensionOperator, ExponentPair, Region};
use sobolev_gauge::{fit, par};

use crate::args::*;
use crate::output::{value, Format, Report};
use crate::CliError;

/// A finished run. `failure` marks a numerical failure whose partial
/// results are still written.
pub struct Outcome {
    pub report: Report,
    pub default_format: Format,
    pub failure: Option<String>,
}

impl Outcome {
    fn ok(report: Report) -> Outcome {
        Outcome {
            report,
            default_format: Format::Csv,
            failure: None,
        }
    }
}

pub fn output_args(cmd: &Command) -> &OutputArgs {
    match cmd {
        Command::Volume(a) => &a.out,
        Command::Density(a) => &a.out,
        Command::Geodesic(a) => &a.out,
        Command::MScale(a) => &a.out,
        Command::Vaisala(a) => &a.out,
        Command::Capacity(a) => &a.out,
        Command::PhiEstimate(a) => &a.out,
        Command::Check(a) => &a.out,
        Command::AdmissibleRegion(a) => &a.out,
        Command::NormBound(a) => &a.out,
    }
}

pub fn dispatch(cmd: &Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Volume(a) => volume(a),
        Command::Density(a) => density(a),
        Command::Geodesic(a) => geodesic(a),
        Command::MScale(a) => m_scale(a),
        Command::Vaisala(a) => vaisala(a),
        Command::Capacity(a) => capacity(a),
        Command::PhiEstimate(a) => phi_estimate(a),
        Command::Check(a) => check_cmd(a),
        Command::AdmissibleRegion(a) => admissible(a),
        Command::NormBound(a) => norm_bound(a),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))
}

fn load_domain(path: &Path) -> Result<Domain, CliError> {
    Ok(Domain::from_json(&read(path)?)?)
}

/// Config echo: the parsed arguments plus the resolved domain spec.
fn config<A: Serialize>(args: &A, domain: Option<&Domain>) -> Value {
    let mut v = value(args);
    if let Some(d) = domain {
        v["domain_spec"] = value(d.spec());
    }
    v
}

fn pairs<'a>(from: &'a [Tuple], to: &'a [Tuple]) -> Result<Vec<(&'a [f64], &'a [f64])>, CliError> {
    if from.len() != to.len() {
        return Err(CliError::Usage(format!(
            "--from given {} times but --to {} times",
            from.len(),
            to.len()
        )));
    }
    Ok(from.iter().zip(to).map(|(x, y)| (x.0.as_slice(), y.0.as_slice())).collect())
}

fn volume(a: &VolumeArgs) -> Result<Outcome, CliError> {
    let domain = load_domain(&a.domain)?;
    let method = a.method.method();
    let mut rep = Report::new(
        "volume",
        a.seed,
        config(a, Some(&domain)),
        vec![
            "center", "radius", "value", "stderr", "method", "sampler", "samples_or_h", "ball_volume",
            "indistinguishable_from_zero", "heuristic_error",
        ],
    );
    let mut values = Vec::new();
    for &r in &a.radius {
        let ball = Ball::new(a.center.0.clone(), r)?;
        let v = ball_intersection_volume(&domain, &ball, method, a.seed)?;
        values.push(v.value);
        rep.push(vec![
            value(&a.center),
            json!(r),
            json!(v.value),
            json!(v.stderr),
            value(v.method),
            value(v.sampler),
            json!(v.samples_or_h),
            json!(ball.volume()),
            json!(v.indistinguishable_from_zero),
            json!(v.heuristic_error),
        ]);
    }
    if a.radius.len() >= 2 {
        rep.summary = Some(json!({ "loglog_slope": fit::loglog_slope(&a.radius, &values) }));
    }
    Ok(Outcome::ok(rep))
}

fn density(a: &DensityArgs) -> Result<Outcome, CliError> {
    let domain = load_domain(&a.domain)?;
    let method = a.method.method();
    if a.levels == 0 {
        return Err(CliError::Usage("--levels must be at least 1".into()));
    }
    let mut rep = Report::new(
        "density",
        a.seed,
        config(a, Some(&domain)),
        vec!["level", "radius", "ratio", "intersection", "stderr", "ball_volume", "infinite"],
    );
    for k in 0..a.levels {
        let r = a.radius * 0.5f64.powi(k as i32);
        let d = density_ratio(&domain, &a.center.0, r, method, par::sub_seed(a.seed, k as u64))?;
        rep.push(vec![
            json!(k),
            json!(r),
            value(d.ratio),
            json!(d.intersection.value),
            json!(d.intersection.stderr),
            json!(d.ball_volume),
            json!(d.infinite_flag),
        ]);
    }
    if a.levels >= 4 {
        let l = limsup_density(&domain, &a.center.0, a.radius, a.levels, method, a.seed)?;
        rep.summary = Some(json!({
            "slope": l.slope,
            "diverging": l.diverging,
            "smallest_scale_ratio": l.smallest_scale_ratio,
        }));
    }
    Ok(Outcome::ok(rep))
}

fn geodesic(a: &GeodesicArgs) -> Result<Outcome, CliError> {
    let domain = load_domain(&a.domain)?;
    let pairs = pairs(&a.from, &a.to)?;
    let graph = GridGraph::build(&domain, a.graph.h, a.graph.stencil.into())?;
    let mut rep = Report::new(
        "geodesic",
        a.seed,
        config(a, Some(&domain)),
        vec!["x", "y", "h", "stencil", "d_omega", "d_euclid", "ratio", "reachable"],
    );
    for (x, y) in pairs {
        let m = graph.intrinsic_distance(x, y)?;
        rep.push(vec![
            value(x),
            value(y),
            json!(m.h),
            value(m.stencil),
            value(m.d_omega),
            json!(m.d_euclid),
            value(m.ratio),
            json!(m.reachable),
        ]);
    }
    rep.summary = Some(json!({
        "nodes": graph.node_count(),
        "components": graph.component_count(),
        "tolerance": Stencil::from(a.graph.stencil).tolerance(),
        "warnings": graph.warnings(),
    }));
    Ok(Outcome::ok(rep))
}

fn m_scale(a: &MScaleArgs) -> Result<Outcome, CliError> {
    let domain = load_domain(&a.domain)?;
    let graph = GridGraph::build(&domain, a.graph.h, a.graph.stencil.into())?;
    let mut rep = Report::new(
        "m-scale",
        a.seed,
        config(a, Some(&domain)),
        vec!["x", "r", "sup", "inf", "sampled", "in_domain"],
    );
    for c in &a.center {
        for &r in &a.r {
            let m = graph.m_at_scale(&domain, &c.0, r, a.directions)?;
            rep.push(vec![
                value(&c.0),
                json!(r),
                value(m.sup),
                value(m.inf),
                json!(m.sampled),
                json!(m.in_domain),
            ]);
        }
    }
    rep.summary = Some(json!({ "warnings": graph.warnings() }));
    Ok(Outcome::ok(rep))
}

fn vaisala(a: &VaisalaArgs) -> Result<Outcome, CliError> {
    let domain = load_domain(&a.domain)?;
    let pairs = pairs(&a.from, &a.to)?;
    let mut rep = Report::new(
        "vaisala",
        a.seed,
        config(a, Some(&domain)),
        vec![
            "x", "y", "radius", "h", "stencil", "f_x", "f_y", "min_value", "max_value", "max_edge_lipschitz",
            "max_gradient", "support_extent", "tolerance", "gradient_tolerance", "range_ok", "endpoints_ok",
            "lipschitz_ok", "gradient_ok", "support_ok", "passes",
        ],
    );
    for (x, y) in pairs {
        let (_, _, r) = vaisala_test_function(&domain, x, y, a.graph.h, a.graph.stencil.into())?;
        rep.push(vec![
            value(x),
            value(y),
            json!(r.radius),
            json!(r.h),
            value(r.stencil),
            json!(r.f_x),
            json!(r.f_y),
            json!(r.min_value),
            json!(r.max_value),
            json!(r.max_edge_lipschitz),
            json!(r.max_gradient),
            json!(r.support_extent),
            json!(r.tolerance),
            json!(r.gradient_tolerance),
            json!(r.range_ok),
            json!(r.endpoints_ok),
            json!(r.lipschitz_ok),
            json!(r.gradient_ok),
            json!(r.support_ok),
            json!(r.passes()),
        ]);
    }
    Ok(Outcome::ok(rep))
}

fn capacity(a: &CapacityArgs) -> Result<Outcome, CliError> {
    let spec: CondenserSpec = serde_json::from_str(&read(&a.condenser)?).map_err(sobolev_gauge::Error::from)?;
    let p = a
        .p
        .or(spec.p)
        .ok_or_else(|| CliError::Usage("no exponent: pass --p or set \"p\" in the condenser file".into()))?;
    let cond = Condenser::from_spec(&spec)?;
    let mut opts = CapacityOptions::new(a.h);
    opts.tol = a.tol;
    opts.max_iter = a.max_iter as usize;
    opts.start = match a.start {
        StartArg::Multilevel => Start::Multilevel,
        StartArg::Random => Start::Random { seed: a.seed },
    };
    let r = p_capacity(&cond, p, &opts)?;
    let mut cfg = config(a, None);
    cfg["condenser_spec"] = value(&spec);
    let mut rep = Report::new(
        "capacity",
        a.seed,
        cfg,
        vec![
            "value", "regularized", "p", "h", "epsilon", "iterations", "last_decrement", "converged", "admissible",
            "free_nodes", "plate_nodes", "levels",
        ],
    );
    rep.push(vec![
        value(r.value),
        value(r.regularized),
        json!(r.p),
        json!(r.h),
        json!(r.epsilon),
        json!(r.iterations),
        json!(r.last_decrement),
        json!(r.converged),
        json!(r.admissible),
        json!(r.free_nodes),
        json!(r.plate_nodes),
        json!(r.levels),
    ]);
    rep.summary = Some(json!({ "warnings": r.warnings }));
    let failure = (!r.converged).then(|| {
        format!(
            "capacity solver did not converge in {} iterations (last relative decrease {:.3e})",
            r.iterations, r.last_decrement
        )
    });
    Ok(Outcome {
        report: rep,
        default_format: Format::Csv,
        failure,
    })
}

fn phi_estimate(a: &PhiEstimateArgs) -> Result<Outcome, CliError> {
    let [cx, cy, r] = a.ball.0[..] else {
        return Err(CliError::Usage("--ball takes cx,cy,r".into()));
    };
    let [lo, hi, height] = a.half_box.0[..] else {
        return Err(CliError::Usage("--half-box takes a,b,c".into()));
    };
    let pq = ExponentPair::new(a.p, a.q, 2)?;
    let op = DemoExtensionOperator::new([lo, hi], height)?;
    let region = Region::ball(Ball::new(vec![cx, cy], r)?);
    let h = a.h.unwrap_or(r / 64.0);
    let family = random_family(&region, a.family_size as usize, h, a.seed)?;
    let est = estimate_phi(&op, &region, &pq, &family, h)?;
    let mut rep = Report::new(
        "phi-estimate",
        a.seed,
        config(a, None),
        vec!["index", "extended_norm", "source_norm", "ratio"],
    );
    for (k, pr) in est.ratios.iter().enumerate() {
        rep.push(vec![json!(k), json!(pr.extended_norm), json!(pr.source_norm), json!(pr.ratio)]);
    }
    rep.push(vec![json!("max"), Value::Null, Value::Null, json!(est.phi_lb)]);
    rep.summary = Some(json!({
        "phi_lb": est.phi_lb,
        "kappa": est.kappa,
        "h": est.h,
        "best": est.best,
        "family_size": est.family_size,
        "skipped": est.skipped,
        "up_to_constants": est.up_to_constants,
        "warnings": est.warnings,
    }));
    Ok(Outcome::ok(rep))
}

fn check_cmd(a: &CheckArgs) -> Result<Outcome, CliError> {
    let domain = load_domain(&a.domain)?;
    let pq = ExponentPair::new(a.p, a.q, domain.dim())?;
    let mut opts = CheckOptions::new(a.probes, a.seed);
    opts.radius = a.radius;
    opts.samples = a.samples;
    opts.h = a.h;
    opts.stencil = a.stencil.into();
    let report = check(&domain, &pq, a.condition.into(), &opts)?;
    let mut rep = Report::new(
        "check",
        a.seed,
        config(a, Some(&domain)),
        vec!["index", "center", "radius", "partner", "phi_lb", "in_aggregate", "measured", "note"],
    );
    for pr in &report.probes {
        let measured: Vec<String> = pr
            .measured
            .iter()
            .map(|m| format!("{}={}", m.name, plain(value(m.value))))
            .collect();
        rep.push(vec![
            json!(pr.index),
            value(&pr.center),
            value(pr.radius),
            value(&pr.partner),
            value(pr.phi_lb),
            json!(pr.in_aggregate),
            json!(measured.join(";")),
            value(&pr.note),
        ]);
    }
    rep.summary = Some(value(&report));
    Ok(Outcome {
        report: rep,
        default_format: Format::Json,
        failure: None,
    })
}

/// JSON scalar without string quotes.
fn plain(v: Value) -> String {
    match v {
        Value::String(s) => s,
        other => other.to_string(),
    }
}

fn admissible(a: &AdmissibleArgs) -> Result<Outcome, CliError> {
    let rows = admissible_region(a.alpha, a.p_min, a.p_max, a.step)?;
    let mut rep = Report::new("admissible-region", a.seed, config(a, None), vec!["p", "q_max"]);
    for e in rows {
        rep.push(vec![json!(e.p), json!(e.q_max)]);
    }
    Ok(Outcome::ok(rep))
}

fn norm_bound(a: &NormBoundArgs) -> Result<Outcome, CliError> {
    let domain = load_domain(&a.domain)?;
    let pq = ExponentPair::new(a.p, a.q, domain.dim())?;
    let r_min = a.r.iter().copied().fold(f64::INFINITY, f64::min);
    let sampling = MSampling {
        spacing: a.spacing,
        h: a.h.unwrap_or(r_min / 16.0),
        stencil: a.stencil.into(),
        directions: a.directions,
    };
    let method = Method::MonteCarlo { samples: a.samples };
    let bounds = a
        .r
        .iter()
        .enumerate()
        .map(|(k, &r)| match a.field {
            FieldArg::K => norm_lb_from_k(&domain, &pq, r, a.spacing, method, par::sub_seed(a.seed, k as u64)),
            FieldArg::M => norm_lb_from_m(&domain, &pq, r, &sampling),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut rep = Report::new(
        "norm-bound",
        a.seed,
        config(a, Some(&domain)),
        vec!["field", "r", "lb", "norm", "inf_variant_lb", "alpha", "power", "samples", "skipped", "infinite_points"],
    );
    let mut warnings = Vec::new();
    for b in &bounds {
        rep.push(vec![
            json!(b.field),
            json!(b.r),
            value(b.lb),
            value(b.norm),
            value(b.inf_variant_lb),
            json!(b.alpha),
            json!(b.power),
            json!(b.samples),
            json!(b.skipped),
            json!(b.infinite_at.len()),
        ]);
        warnings.extend(b.warnings.iter().map(|w| format!("r={}: {w}", b.r)));
    }
    rep.summary = Some(json!({
        "trend_slope": norm_trend(&bounds),
        "up_to_constants": true,
        "warnings": warnings,
    }));
    Ok(Outcome::ok(rep))
}

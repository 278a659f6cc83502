use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;

use serde_json::Value;
use sobolev_gauge_cli::{run, EXIT_INVALID, EXIT_NUMERICAL, EXIT_OK, THREADS_ENV};

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["sobolev-gauge"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn file(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

/// Table part of a CSV report: header row plus data rows.
fn table(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(rows: &[Vec<String>], name: &str) -> Vec<String> {
    let k = rows[0].iter().position(|c| c == name).unwrap();
    rows[1..].iter().map(|r| r[k].clone()).collect()
}

#[test]
fn admissible_region_row() {
    let (code, out, _) = cli(&["admissible-region", "--alpha", "3", "--p-min", "1", "--p-max", "8", "--step", "0.5"]);
    assert_eq!(code, EXIT_OK);
    let rows = table(&out);
    assert_eq!(rows[0], ["p", "q_max"]);
    assert_eq!(rows.len(), 16);
    assert!(rows.contains(&vec!["4.0".to_string(), "2.0".to_string()]));
}

#[test]
fn volume_matches_width_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let cusp = file(dir.path(), "cusp2.json", r#"{"kind":"cusp","alpha":2.0}"#);
    let args = [
        "volume", "--domain", &cusp, "--center", "0,0", "--radius", "0.015625", "--samples", "1e6", "--seed", "7",
    ];
    let (code, out, err) = cli(&args);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("# seed: 7"));
    let rows = table(&out);
    let v: f64 = column(&rows, "value")[0].parse().unwrap();
    let hw: f64 = column(&rows, "stderr")[0].parse().unwrap();
    // 2∫₀^r min(x², √(r²−x²)) dx, crossing found by bisection.
    let r: f64 = 0.015625;
    let (mut lo, mut hi) = (0.0, r);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m * m < (r * r - m * m).sqrt() {
            lo = m;
        } else {
            hi = m;
        }
    }
    let c: f64 = lo;
    let oracle = 2.0 * c.powi(3) / 3.0 + r * r * PI / 2.0 - c * (r * r - c * c).sqrt() - r * r * (c / r).asin();
    assert!((v - oracle).abs() <= hw, "{v} vs {oracle} ± {hw}");
}

#[test]
fn geodesic_disc_example() {
    let dir = tempfile::tempdir().unwrap();
    let disc = file(dir.path(), "disc.json", r#"{"kind":"ball","center":[0,0],"radius":1}"#);
    let (code, out, err) = cli(&[
        "geodesic", "--domain", &disc, "--from", "-0.5,0", "--to", "0.5,0", "--h", "0.01", "--stencil", "16",
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let rows = table(&out);
    assert_eq!(rows[0], ["x", "y", "h", "stencil", "d_omega", "d_euclid", "ratio", "reachable"]);
    let d: f64 = column(&rows, "d_omega")[0].parse().unwrap();
    assert!((d - 1.0).abs() <= 0.028);
    assert_eq!(column(&rows, "reachable")[0], "true");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let (code, out, err) = cli(&["admissible-region", "--alpha", "3", "--bogus", "1"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(out.is_empty());
    assert!(err.contains("Usage"), "{err}");
    let (code, _, _) = cli(&["no-such-command"]);
    assert_eq!(code, EXIT_INVALID);
}

#[test]
fn help_and_version_succeed() {
    let (code, out, _) = cli(&["--help"]);
    assert_eq!(code, EXIT_OK);
    for sub in [
        "volume", "density", "geodesic", "m-scale", "vaisala", "capacity", "phi-estimate", "check",
        "admissible-region", "norm-bound",
    ] {
        assert!(out.contains(sub), "help lacks {sub}");
    }
    let (code, out, _) = cli(&["--version"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains(sobolev_gauge::VERSION));
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let sq = file(dir.path(), "sq.json", r#"{"kind":"box","min":[0,0],"max":[1,1]}"#);
    // q > p
    let (code, _, err) = cli(&["check", "--domain", &sq, "--p", "2", "--q", "4", "--condition", "density"]);
    assert_eq!(code, EXIT_INVALID, "{err}");
    // hypotheses of the density condition need q > n
    let (code, _, err) = cli(&["check", "--domain", &sq, "--p", "4", "--q", "2", "--condition", "density"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("hypothesis"), "{err}");
    let (code, _, err) = cli(&["geodesic", "--domain", "/nonexistent.json", "--from", "0,0", "--to", "1,1", "--h", "0.1"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("/nonexistent.json"));
    let bad = file(dir.path(), "bad.json", r#"{"kind":"blob"}"#);
    let (code, _, _) = cli(&["geodesic", "--domain", &bad, "--from", "0,0", "--to", "1,1", "--h", "0.1"]);
    assert_eq!(code, EXIT_INVALID);
    let (code, _, _) = cli(&["geodesic", "--domain", &sq, "--from", "0.2,0.2", "--h", "0.1", "--to", "0.5,0.5", "--to", "0.7,0.7"]);
    assert_eq!(code, EXIT_INVALID);
    let (code, _, _) = cli(&["volume", "--domain", &sq, "--center", "0.5,0.5", "--radius", "0.1", "--samples", "1.5"]);
    assert_eq!(code, EXIT_INVALID);
}

#[test]
fn non_convergence_exits_3_with_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let ring = file(
        dir.path(),
        "ring.json",
        r#"{"E":{"kind":"ball","center":[0,0],"radius":0.5},"U":{"kind":"ball","center":[0,0],"radius":1},"p":3.0}"#,
    );
    let (code, out, err) = cli(&["capacity", "--condenser", &ring, "--h", "0.03125", "--max-iter", "2"]);
    assert_eq!(code, EXIT_NUMERICAL, "{err}");
    assert!(err.contains("did not converge"));
    assert_eq!(column(&table(&out), "converged")[0], "false");
    let (code, out, _) = cli(&["capacity", "--condenser", &ring, "--h", "0.03125"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(column(&table(&out), "converged")[0], "true");
}

#[test]
fn capacity_needs_an_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let ring = file(
        dir.path(),
        "ring.json",
        r#"{"E":{"kind":"ball","center":[0,0],"radius":0.5},"U":{"kind":"ball","center":[0,0],"radius":1}}"#,
    );
    let (code, _, err) = cli(&["capacity", "--condenser", &ring, "--h", "0.0625"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("--p"));
    let (code, _, _) = cli(&["capacity", "--condenser", &ring, "--h", "0.0625", "--p", "2"]);
    assert_eq!(code, EXIT_OK);
}

#[test]
fn check_emits_report_and_probe_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cusp = file(dir.path(), "cusp.json", r#"{"kind":"cusp","alpha":2.0}"#);
    let out_dir = dir.path().join("out");
    let od = out_dir.display().to_string();
    let args = [
        "check", "--domain", &cusp, "--p", "6", "--q", "4", "--condition", "density", "--probes", "6", "--seed", "9",
    ];
    let (code, stdout, err) = cli(&args);
    assert_eq!(code, EXIT_OK, "{err}");
    let doc: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(doc["seed"], 9);
    assert_eq!(doc["summary"]["condition"], "density");
    assert_eq!(doc["summary"]["probes"].as_array().unwrap().len(), 6);
    assert_eq!(doc["summary"]["up_to_constants"], true);
    assert_eq!(doc["config"]["domain_spec"]["kind"], "cusp");

    let mut with_dir = args.to_vec();
    with_dir.extend_from_slice(&["--output-dir", &od]);
    let (code, stdout, _) = cli(&with_dir);
    assert_eq!(code, EXIT_OK);
    assert!(stdout.is_empty());
    let csv = std::fs::read_to_string(out_dir.join("check.csv")).unwrap();
    let json: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("check.json")).unwrap()).unwrap();
    let rows = table(&csv);
    assert_eq!(rows.len(), 7);
    assert_eq!(json["rows"].as_array().unwrap().len(), 6);
    assert_eq!(json, doc);
}

#[test]
fn json_rows_mirror_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let l = file(dir.path(), "l.json", r#"{"kind":"polygon","vertices":[[0,0],[1,0],[1,1],[2,1],[2,2],[0,2]]}"#);
    let base = ["geodesic", "--domain", &l, "--from", "0.5,0.25", "--to", "1.5,1.25", "--h", "0.05"];
    let (_, csv, _) = cli(&base);
    let mut j = base.to_vec();
    j.extend_from_slice(&["--format", "json"]);
    let (_, json, _) = cli(&j);
    let doc: Value = serde_json::from_str(&json).unwrap();
    let rows = table(&csv);
    let cols: Vec<&str> = doc["columns"].as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect();
    assert_eq!(cols, rows[0]);
    let d: f64 = column(&rows, "d_omega")[0].parse().unwrap();
    assert_eq!(doc["rows"][0]["d_omega"].as_f64().unwrap(), d);
    assert_eq!(doc["version"], sobolev_gauge::VERSION);
    assert_eq!(doc["tool"], "sobolev-gauge");
}

#[test]
fn unreachable_pair_is_marked() {
    let dir = tempfile::tempdir().unwrap();
    let two = file(
        dir.path(),
        "two.json",
        r#"{"kind":"union","parts":[{"kind":"ball","center":[0,0],"radius":0.3},{"kind":"ball","center":[0.8,0],"radius":0.3}]}"#,
    );
    let (code, out, _) = cli(&["geodesic", "--domain", &two, "--from", "0,0", "--to", "0.8,0", "--h", "0.02"]);
    assert_eq!(code, EXIT_OK);
    let rows = table(&out);
    assert_eq!(column(&rows, "d_omega")[0], "+inf");
    assert_eq!(column(&rows, "reachable")[0], "false");
}

#[test]
fn phi_estimate_reports_the_max() {
    let (code, out, err) = cli(&["phi-estimate", "--ball", "0,0.2,0.5", "--p", "4", "--q", "2", "--family-size", "50", "--seed", "1"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let rows = table(&out);
    assert_eq!(rows.len(), 52);
    let last = rows.last().unwrap();
    assert_eq!(last[0], "max");
    let best = column(&rows, "ratio")[..50]
        .iter()
        .filter_map(|v| v.parse::<f64>().ok())
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(last[3].parse::<f64>().unwrap(), best);
    let (code, _, _) = cli(&["phi-estimate", "--ball", "0,0.2,0.5", "--p", "4", "--q", "2", "--family-size", "10"]);
    assert_eq!(code, EXIT_INVALID);
}

#[test]
fn thread_cap_is_honoured_and_validated() {
    let bin = env!("CARGO_BIN_EXE_sobolev-gauge");
    let args = ["phi-estimate", "--ball", "0,0.2,0.5", "--p", "4", "--q", "2", "--seed", "3"];
    let run_with = |t: &str| Command::new(bin).args(args).env(THREADS_ENV, t).output().unwrap();
    let one = run_with("1");
    let four = run_with("4");
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);
    let bad = run_with("zero");
    assert_eq!(bad.status.code(), Some(EXIT_INVALID));
    assert!(String::from_utf8_lossy(&bad.stderr).contains(THREADS_ENV));
    assert_eq!(run_with("0").status.code(), Some(EXIT_INVALID));
}

#[test]
fn output_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("q.csv");
    let t = target.display().to_string();
    let (code, out, _) = cli(&["admissible-region", "--alpha", "1", "--p-min", "2", "--p-max", "3", "--step", "1", "--output", &t]);
    assert_eq!(code, EXIT_OK);
    assert!(out.is_empty());
    let body = std::fs::read_to_string(&target).unwrap();
    assert!(body.ends_with("p,q_max\n2.0,2.0\n3.0,3.0\n"), "{body}");
}

use std::process::{Command, Output};
use std::time::Instant;

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_friable-sums"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV document, split into named fields.
fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn field(header: &[String], row: &[String], name: &str) -> String {
    row[header.iter().position(|h| h == name).unwrap()].clone()
}

#[test]
fn sum_hand_example() {
    let o = run(&["sum", "--x", "10", "--y", "2", "--q", "3", "--a", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("# friable-sums v1\n"));
    let (h, rows) = csv_rows(&text);
    assert_eq!(rows.len(), 1);
    let re: f64 = field(&h, &rows[0], "re_S").parse().unwrap();
    let abs: f64 = field(&h, &rows[0], "abs_S").parse().unwrap();
    assert!((re + 2.0).abs() < 1e-12 && (abs - 2.0).abs() < 1e-12);
    assert_eq!(field(&h, &rows[0], "psi"), "4");
}

#[test]
fn sum_row_and_json() {
    let o = run(&["sum", "--x", "1e6", "--y", "100", "--q", "997", "--a", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(csv_rows(&stdout(&o)).1.len(), 1);
    let o = run(&["sum", "--x", "1e5", "--y", "100", "--q", "997", "--a", "1", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["rows"][0]["envelope_THM1"].as_f64().unwrap() > 0.0);
}

#[test]
fn invalid_arguments_exit_2() {
    let o = run(&["sum", "--q", "10", "--a", "4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    assert_eq!(run(&["sum", "--q", "0"]).status.code(), Some(2));
    assert_eq!(run(&["sum", "--nu", "0"]).status.code(), Some(2));
    assert_eq!(run(&["scan", "--x", "1e3", "--y", "abc", "--q", "7"]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    assert_eq!(run(&["optimize", "--alpha", "2", "--beta", "0.5"]).status.code(), Some(2));
}

#[test]
fn scan_cardinality_and_determinism() {
    let args = [
        "scan", "--x", "1e3,3e3,1e4", "--y", "5,20,x^0.5", "--q", "101,x^0.5", "--random-a", "1", "--seed", "11",
    ];
    let mut full = args.to_vec();
    full[6] = "101,103,x^0.5";
    let a = run(&full);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(csv_rows(&stdout(&a)).1.len(), 27);
    let b = run(&full);
    assert_eq!(a.stdout, b.stdout);
    let mut threaded = full.clone();
    threaded.extend(["--threads", "1"]);
    assert_eq!(run(&threaded).stdout, a.stdout);
}

#[test]
fn scan_smoke_ratios_positive() {
    let o = run(&["scan", "--x", "1e5,1e6", "--y", "30,100", "--q", "101,997", "--a", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let (h, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 8);
    for row in &rows {
        for (name, v) in h.iter().zip(row) {
            if name.starts_with("ratio_") {
                let r: f64 = v.parse().unwrap();
                assert!(r.is_finite() && r > 0.0, "{name} = {v}");
            }
        }
    }
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("# diagnostic ratio_THM1")).count(), 4);
}

#[test]
fn scan_budget_refusal_exit_3() {
    let started = Instant::now();
    let o = run(&["scan", "--x", "1e12", "--y", "100", "--q", "997"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(started.elapsed().as_secs() < 5);
    let o = run(&["scan", "--x", "1e4", "--y", "100", "--q", "997", "--budget", "100"]);
    assert_eq!(o.status.code(), Some(3));
    for args in [
        &["sieve", "--x", "1e20", "--y", "10"][..],
        &["sum", "--x", "1e15", "--y", "100", "--q", "997"],
        &["verify", "--x", "1e12"],
        &["sum", "--x", "1e4", "--budget", "1e3"],
    ] {
        let started = Instant::now();
        assert_eq!(run(args).status.code(), Some(3), "{args:?}");
        assert!(started.elapsed().as_secs() < 5);
    }
}

#[test]
fn scan_writes_output_file() {
    let path = std::env::temp_dir().join(format!("friable-scan-{}.json", std::process::id()));
    let o = run(&[
        "scan", "--x", "1e4", "--y", "x^0.3", "--q", "x^0.6", "--next-prime", "--format", "json", "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(v["rows"][0]["q"].as_i64(), Some(251));
}

fn polygons() -> Vec<(String, Vec<(f64, f64)>)> {
    let o = run(&["regions"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    v["polygons"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, verts)| {
            let pts = verts
                .as_array()
                .unwrap()
                .iter()
                .map(|p| (p["alpha_f64"].as_f64().unwrap(), p["beta_f64"].as_f64().unwrap()))
                .collect();
            (k.clone(), pts)
        })
        .collect()
}

fn inside(poly: &[(f64, f64)], p: (f64, f64)) -> bool {
    let mut c = false;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        if (a.1 > p.1) != (b.1 > p.1) && p.0 < a.0 + (p.1 - a.1) * (b.0 - a.0) / (b.1 - a.1) {
            c = !c;
        }
    }
    c
}

#[test]
fn regions_json_and_vertex_strings() {
    let o = run(&["regions"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let e1 = v["polygons"]["E1"].as_array().unwrap();
    assert!(e1.iter().any(|p| p["alpha"] == "1/5" && p["beta"] == "4/5"));
    let e4 = v["polygons"]["E4"].as_array().unwrap();
    assert!(e4.iter().any(|p| p["alpha"] == "1/3" && p["beta"] == "4/3"));
}

#[test]
fn regions_do_not_overlap_on_probe_grid() {
    let polys = polygons();
    for i in 0..200 {
        for j in 0..200 {
            // Irrational offsets keep probes off the rational boundary lines.
            let p = ((i as f64 + 0.5f64.sqrt()) / 200.0, 2.0 * (j as f64 + 0.3f64.sqrt()) / 200.0);
            let hits = polys.iter().filter(|(_, poly)| inside(poly, p)).count();
            assert!(hits <= 1, "{p:?} lies in {hits} polygons");
        }
    }
}

#[test]
fn verify_default_scale_is_fast_and_green() {
    let started = Instant::now();
    let o = run(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(started.elapsed().as_secs_f64() < 10.0);
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.contains(",PASS,")).count(), 7);
}

#[test]
fn verify_named_suite_and_sabotage() {
    let o = run(&["verify", "--suite", "buchstab", "--x", "3e4", "--y", "12", "--r", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["verify", "--suite", "buchstab", "--sabotage"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("counterexample x=4096"), "{err}");
}

#[test]
fn optimize_regimes() {
    let o = run(&["optimize", "--alpha", "0.3", "--beta", "0.75"]);
    let (h, rows) = csv_rows(&stdout(&o));
    let omega: f64 = field(&h, &rows[0], "omega").parse().unwrap();
    assert!((omega - 0.1625).abs() < 1e-12);
    assert_eq!(field(&h, &rows[0], "regime"), "inside-one-peak");
    let o = run(&["optimize", "--alpha", "0.9", "--beta", "1.5"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(field(&h, &csv_rows(&stdout(&o)).1[0], "regime"), "trivial");
}

#[test]
fn sieve_table() {
    let o = run(&["sieve", "--x", "100", "--y", "2,3"]);
    let (_, rows) = csv_rows(&stdout(&o));
    // 2-smooth: 1, 2, 4, ..., 64; 3-smooth up to 100: 20 numbers.
    assert_eq!(rows[0][2], "7");
    assert_eq!(rows[1][2], "20");
}

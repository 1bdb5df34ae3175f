use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_zboundary"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn body(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn meta<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|l| l.strip_prefix(&format!("# {key}=")))
}

#[test]
fn coeffs_ce_support_starts_at_conductor_squared() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ce.csv");
    let o = run(&["coeffs", "--curve", "11a", "--what", "cE", "--limit", "100000", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let rows = body(&text);
    assert_eq!(rows[0], "index,value");
    assert!(rows[1].starts_with("121,"));
    assert!(meta(&text, "config_hash").unwrap().len() == 64);
    assert_eq!(meta(&text, "seed"), Some("20240601"));
}

#[test]
fn coeffs_l_matches_the_library() {
    let o = run(&["coeffs", "--curve", "11a", "--what", "L", "--limit", "10"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let l = zboundary::curves::EllipticCurve::builtin("11a").unwrap().l_coeffs(10).unwrap();
    let rows: Vec<(usize, f64)> = body(&text)[1..]
        .iter()
        .map(|r| {
            let (i, v) = r.split_once(',').unwrap();
            (i.parse().unwrap(), v.parse().unwrap())
        })
        .collect();
    let want: Vec<(usize, f64)> = l.support().map(|i| (i, l.get(i))).collect();
    assert_eq!(rows, want);
}

#[test]
fn bad_input_is_a_usage_error() {
    assert_eq!(run(&["coeffs", "--curve", "1,2,x,4,5", "--conductor", "11"]).status.code(), Some(2));
    assert_eq!(run(&["coeffs", "--curve", "nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["ztable", "--curve", "37a", "--x-lo", "0.1", "--T", "500"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn domain_error_names_the_minimal_x() {
    let o = run(&["ztable", "--curve", "37a", "--x-lo", "0.1", "--T", "500"]);
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("0.200000"), "{err}");
}

#[test]
fn ztable_37a_asserts_no_positive_sign_up_to_one_half() {
    for bound in ["chain", "sharp"] {
        let o = run(&["ztable", "--curve", "37a", "--x-lo", "0.2", "--x-hi", "1.0", "--points", "50", "--bound", bound]);
        assert!(o.status.success());
        let text = String::from_utf8(o.stdout).unwrap();
        let rows = body(&text);
        assert_eq!(rows[0], "x,value,bound,sign");
        assert_eq!(rows.len(), 51);
        for r in &rows[1..] {
            let f: Vec<&str> = r.split(',').collect();
            let x: f64 = f[0].parse().unwrap();
            if x <= 0.5 {
                assert_ne!(f[3], "+", "{r}");
            }
        }
    }
}

#[test]
fn ztable_signs_agree_across_two_cutoffs() {
    let table = |t: &str| {
        let o = run(&["ztable", "--curve", "37a", "--x-lo", "0.12", "--x-hi", "0.3", "--points", "12", "--T", t, "--bound", "sharp"]);
        assert!(o.status.success());
        let text = String::from_utf8(o.stdout).unwrap();
        body(&text)[1..].iter().map(|r| r.split(',').map(String::from).collect::<Vec<_>>()).collect::<Vec<_>>()
    };
    let (a, b) = (table("1389"), table("5556"));
    let mut asserted = 0;
    for (ra, rb) in a.iter().zip(&b) {
        if ra[3] == "-" || ra[3] == "+" {
            asserted += 1;
            assert_eq!(ra[3], "-");
            assert!(rb[3] == "-" || rb[3] == "0", "{ra:?} vs {rb:?}");
            let (va, vb): (f64, f64) = (ra[1].parse().unwrap(), rb[1].parse().unwrap());
            let bound: f64 = ra[2].parse().unwrap();
            assert!((va - vb).abs() <= bound);
        }
    }
    assert!(asserted >= 5);
}

#[test]
fn json_output_round_trips() {
    let o = run(&["ztable", "--curve", "11a", "--x-lo", "0.3", "--x-hi", "0.6", "--points", "4", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let pts = v["data"].as_array().unwrap();
    assert_eq!(pts.len(), 4);
    assert!(pts[0]["x"].as_f64().unwrap() == 0.3);
    assert_eq!(v["meta"]["command"], "ztable");
    let cfg: serde_json::Value = serde_json::from_str(v["meta"]["config"].as_str().unwrap()).unwrap();
    assert_eq!(cfg["grid"]["points"], 4);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"curve":"37a","goldfeld":{"ladder":[1000,10000],"r":1}}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let o = run(&["goldfeld", "--config", c]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(body(&text).len(), 3);
    assert!(body(&text)[0].ends_with("(log T)^1"));
    let o = run(&["goldfeld", "--config", c, "--ladder", "1000,10000,100000"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let rows = body(&text);
    assert_eq!(rows.len(), 4);
    let trend: Vec<f64> = rows[1..].iter().map(|r| r.rsplit(',').next().unwrap().parse().unwrap()).collect();
    let ratio = trend.iter().cloned().fold(f64::MIN, f64::max) / trend.iter().cloned().fold(f64::MAX, f64::min);
    assert!(ratio < 1.5, "{trend:?}");
}

#[test]
fn goldfeld_c1_negative_for_11a() {
    let o = run(&["goldfeld", "--curve", "11a", "--r", "0", "--ladder", "100,1000,10000,100000"]);
    let text = String::from_utf8(o.stdout).unwrap();
    for r in &body(&text)[1..] {
        let c1: f64 = r.split(',').nth(2).unwrap().parse().unwrap();
        assert!(c1 < 0.0, "{r}");
    }
}

#[test]
fn omega_is_deterministic_and_thread_independent() {
    let args = ["omega", "--samples", "5", "--x-lo", "0.1", "--x-hi", "1", "--points", "10", "--limit", "2000", "--format", "json", "--seed", "7"];
    let a = run(&args);
    let mut with_threads = args.to_vec();
    with_threads.extend(["--threads", "1"]);
    let b = run(&with_threads);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["data"]["samples"].as_array().unwrap().len(), 5);
    assert_eq!(v["data"]["nonneg_violations"], 0);
}

#[test]
fn verify_single_criterion_and_fault_injection() {
    let o = run(&["verify", "--only", "kernel-zero-integral"]);
    assert_eq!(o.status.code(), Some(0));
    let out = String::from_utf8(o.stdout).unwrap();
    assert_eq!(out.lines().count(), 1);
    assert!(out.starts_with("[PASS]"));
    let o = run(&["verify", "--only", "bessel-accuracy", "--inject-fault", "bessel"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().contains("bessel-accuracy"));
    assert_eq!(run(&["verify", "--only", "nope"]).status.code(), Some(2));
}

#[test]
fn curve_json_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("curve.json");
    std::fs::write(&p, r#"{"a1":0,"a2":-1,"a3":1,"a4":-10,"a6":-20,"conductor":11,"bad_ap":{"11":1}}"#).unwrap();
    let from_file = run(&["coeffs", "--curve", p.to_str().unwrap(), "--what", "L", "--limit", "50"]);
    let builtin = run(&["coeffs", "--curve", "11a", "--what", "L", "--limit", "50"]);
    let strip = |o: &Output| body(std::str::from_utf8(&o.stdout).unwrap()).join("\n");
    assert!(from_file.status.success());
    assert_eq!(strip(&from_file), strip(&builtin));
    assert!(Path::new(&p).exists());
}

use std::path::Path;
use std::process::{Command, Output};

use num_bigint::BigUint;
use serde_json::Value;

fn pairflip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pairflip"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Exact fields must match; float fields to a relative 1e-12.
fn assert_csv_matches(got: &str, golden: &Path) {
    let want = std::fs::read_to_string(golden).unwrap();
    let (g, w): (Vec<&str>, Vec<&str>) = (got.lines().collect(), want.lines().collect());
    assert_eq!(g.len(), w.len(), "{got}");
    for (gl, wl) in g.iter().zip(&w) {
        for (a, b) in gl.split(',').zip(wl.split(',')) {
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) if a.contains('.') || b.contains('.') => {
                    assert!((x - y).abs() <= 1e-12 * y.abs(), "{a} vs {b}")
                }
                _ => assert_eq!(a, b),
            }
        }
    }
}

fn golden(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

#[test]
fn census_golden() {
    let o = pairflip(&["census", "--n", "3", "--len", "4"]);
    assert!(o.status.success());
    assert_csv_matches(&stdout(&o), &golden("census_n3_l4.csv"));
}

#[test]
fn census_dimensions_partition_the_space() {
    let o = pairflip(&["census", "--n", "3", "--len", "20"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let total: BigUint = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            f[1].parse::<BigUint>().unwrap() * f[2].parse::<BigUint>().unwrap()
        })
        .sum();
    assert_eq!(total, BigUint::from(3u32).pow(20));
}

#[test]
fn sweep_golden_and_thread_independent() {
    let args = ["sweep", "--n", "2", "--gamma", "0.1", "--lens", "4,6,8", "--traj", "500", "--seed", "7"];
    let a = pairflip(&args);
    assert!(a.status.success());
    assert_csv_matches(&stdout(&a), &golden("sweep_n2.csv"));
    let mut one = vec!["--threads", "1"];
    one.extend(args);
    assert_eq!(stdout(&pairflip(&one)), stdout(&a));
}

#[test]
fn gap_json_fields() {
    let o = pairflip(&["gap", "--n", "3", "--len", "6", "--chain", "nonlocal"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    for k in ["gap", "method", "residual", "cheeger_upper", "cheeger_lower_witness"] {
        assert!(v.get(k).is_some(), "missing {k}");
    }
    let gap = v["gap"].as_f64().unwrap();
    assert!(gap > 0.0 && gap <= v["cheeger_upper"].as_f64().unwrap());
}

#[test]
fn exit_codes() {
    assert_eq!(pairflip(&["census", "--n", "3"]).status.code(), Some(1));
    assert_eq!(pairflip(&["census", "--n", "1", "--len", "4"]).status.code(), Some(1));
    assert_eq!(pairflip(&["bounds", "--curve", "nope", "--n", "3", "--lens", "8"]).status.code(), Some(1));
    assert_eq!(
        pairflip(&["gap", "--n", "3", "--len", "30", "--chain", "local"]).status.code(),
        Some(3)
    );
    assert_eq!(pairflip(&["--help"]).status.code(), Some(0));
    let ok = pairflip(&["verify", "--suite", "lumping", "--n", "3", "--max-len", "5"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn artifacts_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# defaults\nn = 3\nlen = 6\nformat = json\n").unwrap();
    let out = dir.path().join("census.json");
    let o = pairflip(&[
        "--config",
        cfg.to_str().unwrap(),
        "census",
        "--len",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    // the flag overrides the file
    assert_eq!(v["len"], 4);
    assert_eq!(v["total"], "81");
    let meta: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("census.json.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "census");
    assert_eq!(meta["config"]["n"], 3);
    assert_eq!(meta["config"]["output"]["format"], "json");
}

#[test]
fn simulate_writes_series_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let o = pairflip(&[
        "simulate",
        "--n",
        "2",
        "--len",
        "6",
        "--traj",
        "200",
        "--t-max",
        "400",
        "--obs",
        "charge:1,depth",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("t,mean_Q1,stderr_Q1,mean_depth,stderr_depth\n0,1,0,"));
    assert_eq!(csv.lines().count(), 402);
    let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["first_passage"]["censored"], false);
    assert!(summary["first_passage"]["t_q"].as_u64().is_some());
}

#[test]
fn bounds_curves() {
    let o = pairflip(&["bounds", "--curve", "gap", "--n", "3", "--lens", "8,10,12"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("L,value,valid,"));
    assert_eq!(text.lines().count(), 4);
    let o = pairflip(&["bounds", "--curve", "entropy-time", "--n", "3", "--lens", "20", "--gamma", "0.9"]);
    let line = stdout(&o).lines().nth(1).unwrap().to_string();
    assert!(line.starts_with("20,,false"), "{line}");
}

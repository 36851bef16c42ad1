use std::process::{Command, Output};

fn wpir(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wpir"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn maxl_curve_endpoints() {
    let out = wpir(&[
        "curve",
        "--metric",
        "maxl",
        "--servers",
        "3",
        "--messages",
        "2",
        "--points",
        "50",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("rho_bits,download_cost,p_direct,p_0,p_1\n"));
    let r = rows(&text);
    assert_eq!(r.len(), 50);
    assert_eq!((r[0][0], r[0][1]), (0.0, 1.33333333333));
    let last = r.last().unwrap();
    assert!((last[0] - 0.415037499279).abs() < 1e-12);
    assert_eq!(last[1], 1.0);
}

#[test]
fn mi_curve_endpoints() {
    let out = wpir(&[
        "curve",
        "--metric",
        "mi",
        "--servers",
        "3",
        "--messages",
        "2",
    ]);
    assert!(out.status.success());
    let r = rows(&stdout(&out));
    assert_eq!((r[0][0], r[0][1]), (0.0, 1.33333333333));
    let last = r.last().unwrap();
    assert_eq!((last[0], last[1]), (0.333333333333, 1.0));
}

#[test]
fn curve_to_files_with_baseline_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("curve{i}.csv"));
        let base = dir.path().join(format!("base{i}.csv"));
        let status = wpir(&[
            "curve",
            "--metric",
            "maxl",
            "-n",
            "4",
            "-k",
            "3",
            "--out",
            out.to_str().unwrap(),
            "--baseline",
            base.to_str().unwrap(),
        ])
        .status;
        assert!(status.success());
        runs.push((std::fs::read(out).unwrap(), std::fs::read(base).unwrap()));
    }
    assert_eq!(runs[0], runs[1]);
    assert_ne!(runs[0].0, runs[0].1);
}

#[test]
fn json_curve_parses() {
    let out = wpir(&[
        "curve", "--metric", "mi", "-n", "3", "-k", "3", "--points", "20", "--format", "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.as_array().unwrap().len() >= 2);
}

#[test]
fn single_point_grid_is_a_usage_error() {
    let out = wpir(&[
        "curve", "--metric", "maxl", "-n", "3", "-k", "2", "--points", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid_size"));
}

#[test]
fn verify_small_instances_pass() {
    for (n, k) in [("3", "2"), ("2", "2")] {
        let out = wpir(&["verify", "-n", n, "-k", k]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let text = stdout(&out);
        assert!(text.lines().all(|l| l.starts_with("PASS")));
        assert_eq!(text.lines().count(), 8);
    }
}

#[test]
fn verify_refuses_huge_key_space() {
    let out = wpir(&["verify", "-n", "10", "-k", "8"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("too large"));
}

#[test]
fn dump_table_rows() {
    let out = wpir(&["dump-table", "-n", "3", "-k", "2", "--message", "2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 14);
    assert!(text.contains("a_1⊕b_2"));
    let out = wpir(&["dump-table", "-n", "2", "-k", "2", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 6);
}

#[test]
fn simulate_is_seeded() {
    let args = [
        "simulate", "--metric", "maxl", "--rho", "0.2", "-n", "3", "-k", "2", "--trials", "2000",
    ];
    let a = wpir(&args);
    let b = wpir(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["success_rate"], 1.0);
    assert_eq!(v["trials"], 2000);

    let mut reseeded = args.to_vec();
    reseeded.extend(["--seed", "7"]);
    let c = wpir(&reseeded);
    let w: serde_json::Value = serde_json::from_slice(&c.stdout).unwrap();
    assert_eq!(w["seed"], 7);
    assert_ne!(v["empirical_download"], w["empirical_download"]);
}

#[test]
fn simulate_from_scheme_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scheme.json");
    std::fs::write(
        &path,
        r#"{"N": 3, "K": 2, "dist": {"p_direct": 0.0, "p_weights": [0.1111111111111111, 0.1111111111111111]}}"#,
    )
    .unwrap();
    let out = wpir(&[
        "simulate",
        "--scheme-file",
        path.to_str().unwrap(),
        "--trials",
        "500",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    std::fs::write(
        &path,
        r#"{"N": 3, "K": 2, "dist": {"p_direct": 0.5, "p_weights": [0.1, 0.1]}}"#,
    )
    .unwrap();
    let out = wpir(&["simulate", "--scheme-file", path.to_str().unwrap()]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn simulate_without_scheme_is_usage_error() {
    let out = wpir(&["simulate", "--trials", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

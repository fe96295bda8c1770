//! Black-box tests of the installed binary: exit codes, output gating,
//! determinism, and the bench harness.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_resens"))
}

fn repo_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn write_edges(dir: &Path, name: &str, edges: &[(i64, i64)]) -> PathBuf {
    let path = dir.join(name);
    let body: String = edges
        .iter()
        .map(|(a, b)| format!("{a} {b}\n"))
        .collect();
    std::fs::write(&path, body).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("failed to run binary")
}

#[test]
fn release_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_edges(dir.path(), "edges.txt", &[(1, 2), (2, 3), (1, 3), (3, 4)]);
    let args = |seed: &str| {
        let mut c = bin();
        c.args([
            "release",
            "--query",
            repo_path("queries/q_triangle.cq").to_str().unwrap(),
            "--bind",
            &format!("Edge={}:edge-list:2", data.display()),
            "--epsilon",
            "1.0",
            "--seed",
            seed,
        ]);
        c
    };
    let a = run(&mut args("42"));
    let b = run(&mut args("42"));
    let c = run(&mut args("43"));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn true_count_is_gated() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_edges(dir.path(), "edges.txt", &[(1, 2), (2, 3), (1, 3)]);
    let base = [
        "release".to_string(),
        "--query".into(),
        repo_path("queries/q_triangle.cq").to_str().unwrap().into(),
        "--bind".into(),
        format!("Edge={}:edge-list:2", data.display()),
        "--epsilon".into(),
        "1.0".into(),
        "--seed".into(),
        "5".into(),
    ];
    let hidden = run(bin().args(&base));
    assert!(hidden.status.success());
    let doc: Value = serde_json::from_slice(&hidden.stdout).unwrap();
    assert!(doc["true_count"].is_null());
    assert!(doc["noise"].is_null());

    let shown = run(bin().args(&base).arg("--show-true"));
    let doc: Value = serde_json::from_slice(&shown.stdout).unwrap();
    assert_eq!(doc["true_count"], 1);
    let noise = doc["noise"].as_f64().unwrap();
    let released = doc["released"].as_f64().unwrap();
    assert!((released - (1.0 + noise)).abs() < 1e-9);
}

#[test]
fn exit_codes_distinguish_failures() {
    let dir = tempfile::tempdir().unwrap();
    // Parse error in the query file.
    let bad = dir.path().join("bad.cq");
    std::fs::write(&bad, "q() :- Edge(a,").unwrap();
    let data = write_edges(dir.path(), "edges.txt", &[(1, 2)]);
    let out = run(bin().args([
        "sensitivity",
        "--query",
        bad.to_str().unwrap(),
        "--bind",
        &format!("Edge={}:edge-list:2", data.display()),
        "--beta",
        "0.1",
    ]));
    assert_eq!(out.status.code(), Some(1));

    // Oracle guard refusal: the brute-force measure on an oversized instance.
    let big: Vec<(i64, i64)> = (0..40).map(|i| (i, i + 1)).collect();
    let bigdata = write_edges(dir.path(), "big.txt", &big);
    let out = run(bin().args([
        "sensitivity",
        "--query",
        repo_path("queries/q_triangle.cq").to_str().unwrap(),
        "--bind",
        &format!("Edge={}:edge-list:2", bigdata.display()),
        "--beta",
        "0.1",
        "--measures",
        "rs,ss-oracle",
    ]));
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("cap"), "{stderr}");
}

#[test]
fn strict_dp_refuses_worst_case_laplace() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_edges(dir.path(), "edges.txt", &[(1, 2), (2, 3), (1, 3)]);
    let out = run(bin().args([
        "release",
        "--query",
        repo_path("queries/q_triangle.cq").to_str().unwrap(),
        "--bind",
        &format!("Edge={}:edge-list:2", data.display()),
        "--epsilon",
        "1.0",
        "--mechanism",
        "laplace-gs",
        "--strict-dp",
    ]));
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("strict"), "{stderr}");

    // Without the flag the relaxed release goes through.
    let out = run(bin().args([
        "release",
        "--query",
        repo_path("queries/q_triangle.cq").to_str().unwrap(),
        "--bind",
        &format!("Edge={}:edge-list:2", data.display()),
        "--epsilon",
        "1.0",
        "--mechanism",
        "laplace-gs",
    ]));
    assert!(out.status.success());
}

#[test]
fn sensitivity_report_has_contracted_shape() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_edges(dir.path(), "edges.txt", &[(1, 2), (2, 3)]);
    let out_file = dir.path().join("report.json");
    let out = run(bin().args([
        "sensitivity",
        "--query",
        repo_path("queries/q_triangle.cq").to_str().unwrap(),
        "--bind",
        &format!("Edge={}:edge-list:2", data.display()),
        "--epsilon",
        "1.0",
        "--measures",
        "rs,gs,es,ss-oracle",
        "--out",
        out_file.to_str().unwrap(),
    ]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value =
        serde_json::from_str(&std::fs::read_to_string(&out_file).unwrap()).unwrap();
    for field in [
        "beta", "epsilon", "k_hat", "hat_ls", "rs", "gs_upper", "es", "ss_oracle", "te",
        "timings_ms",
    ] {
        assert!(!doc[field].is_null() || field == "epsilon", "missing {field}");
    }
    assert_eq!(doc["beta"], 0.1);
    assert!(doc["rs"].as_f64().unwrap() > 0.0);
    // The brute-force truncated smooth sensitivity never exceeds RS.
    assert!(doc["ss_oracle"].as_f64().unwrap() <= doc["rs"].as_f64().unwrap() + 1e-9);
}

#[test]
fn bench_sweep_rs_non_increasing_in_beta() {
    let dir = tempfile::tempdir().unwrap();
    let datadir = dir.path().join("data");
    std::fs::create_dir(&datadir).unwrap();
    write_edges(
        &datadir,
        "toy.txt",
        &[(1, 2), (2, 3), (1, 3), (3, 4), (4, 1), (2, 4)],
    );
    std::fs::write(
        datadir.join("manifest.json"),
        r#"{"datasets": [
            {"name": "toy", "url": "https://example.invalid/toy.txt", "file": "toy.txt",
             "relation": "Edge", "format": "edge-list", "arity": 2, "sha256": ""},
            {"name": "absent", "url": "https://example.invalid/absent.txt", "file": "absent.txt",
             "relation": "Edge", "format": "edge-list", "arity": 2, "sha256": ""}
        ]}"#,
    )
    .unwrap();
    let qdir = dir.path().join("queries");
    std::fs::create_dir(&qdir).unwrap();
    std::fs::copy(
        repo_path("queries/q_triangle.cq"),
        qdir.join("q_triangle.cq"),
    )
    .unwrap();

    let runner = || {
        run(bin().args([
            "bench",
            "--data",
            datadir.to_str().unwrap(),
            "--queries",
            qdir.to_str().unwrap(),
            "--sweep-beta",
            "0.05,0.1,0.2,0.4",
            "--measures",
            "rs,es",
            "--jobs",
            "2",
        ]))
    };
    let out = runner();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("absent"), "missing skip notice: {stderr}");

    let rows: Vec<Value> = String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 4);
    let rs: Vec<f64> = rows.iter().map(|r| r["rs"].as_f64().unwrap()).collect();
    for w in rs.windows(2) {
        assert!(w[0] >= w[1] - 1e-9, "rs not monotone in beta: {rs:?}");
    }
    // Same inputs, same rows (timings aside).
    let again = runner();
    let rows2: Vec<Value> = String::from_utf8_lossy(&again.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    for (mut a, mut b) in rows.into_iter().zip(rows2) {
        a.as_object_mut().unwrap().remove("timings_ms");
        b.as_object_mut().unwrap().remove("timings_ms");
        assert_eq!(a, b);
    }
}

#[test]
fn fetch_skips_present_files() {
    let dir = tempfile::tempdir().unwrap();
    let datadir = dir.path().join("data");
    std::fs::create_dir(&datadir).unwrap();
    write_edges(&datadir, "toy.txt", &[(1, 2)]);
    std::fs::write(
        datadir.join("manifest.json"),
        r#"{"datasets": [
            {"name": "toy", "url": "https://example.invalid/toy.txt", "file": "toy.txt",
             "relation": "Edge", "format": "edge-list", "arity": 2, "sha256": ""}
        ]}"#,
    )
    .unwrap();
    let out = run(bin().args(["fetch-data", "--data", datadir.to_str().unwrap()]));
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("skipped"));
}

use std::path::Path;
use std::process::Command;

use metric_forest::io::{fmt_float, parse_diagram, parse_rows};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_metric-forest"));
    c.env_remove("METRIC_FOREST_SEED");
    c
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(run(&["--help"]).0, 0);
    assert_eq!(run(&[]).0, 1);
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["knn", "--k", "1"]).0, 1);
    assert_eq!(run(&["gen", "--family", "line"]).0, 1);
    let (code, _, err) = run(&["gen", "--family", "two-sets", "--k", "40"]);
    assert_eq!(code, 1);
    assert!(!err.is_empty());
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let dup = write(dir.path(), "dup.csv", "0,0\n1,1\n0,0\n");
    let (code, out, err) = run(&["mst", "--input", &dup]);
    assert_eq!((code, out.as_str()), (2, ""));
    assert!(err.contains("duplicate"));
    let (code, out, _) = run(&["mst", "--input", &dup, "--dedup"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 2);
    let ragged = write(dir.path(), "ragged.csv", "0,0\n1\n");
    assert_eq!(run(&["mst", "--input", &ragged]).0, 2);
    assert_eq!(run(&["mst", "--input", "/nonexistent/x.csv"]).0, 2);
}

#[test]
fn verify_rejects_a_bad_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.csv", "0,1,5\n1,0,1\n5,1,0\n");
    let (code, out, _) = run(&["verify", "--matrix", &bad]);
    assert_eq!(code, 2);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["ok"], false);
    let good = write(dir.path(), "good.csv", "0,1,2\n1,0,1\n2,1,0\n");
    let (code, out, _) = run(&["verify", "--matrix", &good]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["ok"], true);
}

#[test]
fn mst_matches_the_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let pts = bin()
        .args(["gen", "--family", "uniform", "--n", "300", "--seed", "5"])
        .output()
        .unwrap();
    let input = write(
        dir.path(),
        "pts.csv",
        std::str::from_utf8(&pts.stdout).unwrap(),
    );
    let summary = dir.path().join("s.json");
    let (c1, fast, _) = run(&[
        "mst",
        "--input",
        &input,
        "--summary",
        summary.to_str().unwrap(),
    ]);
    let (c2, slow, _) = run(&["mst", "--input", &input, "--oracle"]);
    assert_eq!((c1, c2), (0, 0));
    let w = |s: &str| {
        parse_rows(s, true)
            .unwrap()
            .iter()
            .map(|r| r[2])
            .sum::<f64>()
    };
    assert!((w(&fast) - w(&slow)).abs() < 1e-9);
    assert_eq!(parse_rows(&fast, true).unwrap().len(), 299);
    let s: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(summary).unwrap()).unwrap();
    assert_eq!(s["n"], 300);
    assert!(s["rounds"].as_u64().unwrap() <= 10);
}

#[test]
fn golden_mergegram_and_pd0() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "line.csv", "0\n1\n3\n7\n");
    let (code, out, _) = run(&["mergegram", "--input", &input]);
    assert_eq!(code, 0);
    let mg = parse_diagram(&out, true).unwrap();
    let want = [
        (0.0, 1.0),
        (0.0, 1.0),
        (0.0, 2.0),
        (0.0, 4.0),
        (1.0, 2.0),
        (2.0, 4.0),
        (4.0, f64::INFINITY),
    ];
    assert_eq!(mg.pairs(), &want);
    let (_, out, _) = run(&["pd0", "--input", &input]);
    let pd = parse_diagram(&out, true).unwrap();
    assert_eq!(
        pd.pairs(),
        &[(0.0, 1.0), (0.0, 2.0), (0.0, 4.0), (0.0, f64::INFINITY)]
    );
    let (_, out, _) = run(&["pd0", "--input", &input, "--half-scale"]);
    assert_eq!(parse_diagram(&out, true).unwrap().pairs()[0], (0.0, 0.5));
}

#[test]
fn bottleneck_between_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", "birth,death\n0,1\n0,inf\n");
    let b = write(dir.path(), "b.csv", "birth,death\n0,1.5\n0,inf\n");
    let (code, out, _) = run(&["bottleneck", "--a", &a, "--b", &b, "--header"]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), fmt_float(0.5));
}

#[test]
fn knn_and_kde_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let r = write(dir.path(), "r.csv", "0,0\n1,0\n0,2\n");
    let q = write(dir.path(), "q.csv", "0.9,0\n");
    let (code, out, _) = run(&["knn", "--ref", &r, "--query", &q, "--k", "2"]);
    assert_eq!(code, 0);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("0,1,1,"));
    assert!(rows[2].starts_with("0,2,0,"));
    let (code, out, _) = run(&[
        "kde", "--ref", &r, "--query", &q, "--r", "0.15", "--t", "0.025",
    ]);
    assert_eq!(code, 0);
    let f = parse_rows(&out, true).unwrap();
    assert!(f[0][1] > 0.99 && f[0][1] < 1.01);
    assert_eq!(
        run(&["kde", "--ref", &r, "--query", &q, "--r", "0", "--t", "0.025"]).0,
        1
    );
}

#[test]
fn generators_are_byte_deterministic() {
    for fam in ["uniform", "sensible-tree", "tube"] {
        let a = run(&["gen", "--family", fam, "--n", "40", "--seed", "9"]);
        let b = run(&["gen", "--family", fam, "--n", "40", "--seed", "9"]);
        assert_eq!(a.0, 0, "{fam}: {}", a.2);
        assert_eq!(a.1, b.1);
    }
    let env = bin()
        .args(["gen", "--family", "uniform", "--n", "10"])
        .env("METRIC_FOREST_SEED", "9")
        .output()
        .unwrap();
    let flag = run(&["gen", "--family", "uniform", "--n", "10", "--seed", "9"]);
    assert_eq!(String::from_utf8(env.stdout).unwrap(), flag.1);
}

#[test]
fn generated_csv_round_trips() {
    let (_, text, _) = run(&[
        "gen", "--family", "uniform", "--n", "25", "--dim", "3", "--seed", "1",
    ]);
    let rows = parse_rows(&text, false).unwrap();
    assert_eq!(rows, metric_forest::datasets::gen_uniform_cloud(25, 3, 1));
}

#[test]
fn eps_sample_from_generated_tree() {
    let dir = tempfile::tempdir().unwrap();
    let tree = dir.path().join("t.json");
    assert_eq!(
        run(&["gen", "--family", "star", "--out", tree.to_str().unwrap()]).0,
        0
    );
    let (code, out, _) = run(&[
        "gen",
        "--family",
        "eps-sample",
        "--tree",
        tree.to_str().unwrap(),
        "--n",
        "50",
        "--epsilon",
        "0.01",
    ]);
    assert_eq!(code, 0);
    assert_eq!(parse_rows(&out, false).unwrap().len(), 50);
}

#[test]
fn skeletonize_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let tree = dir.path().join("t.json");
    run(&["gen", "--family", "star", "--out", tree.to_str().unwrap()]);
    let cloud = dir.path().join("c.csv");
    run(&[
        "gen",
        "--family",
        "eps-sample",
        "--tree",
        tree.to_str().unwrap(),
        "--n",
        "800",
        "--epsilon",
        "0.01",
        "--seed",
        "2",
        "--out",
        cloud.to_str().unwrap(),
    ]);
    let out = dir.path().join("sk");
    let (code, _, err) = run(&[
        "skeletonize",
        "--input",
        cloud.to_str().unwrap(),
        "--k",
        "10",
        "--r",
        "0.05",
        "--t",
        "0.01",
        "--delta",
        "0.2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    for f in ["edges.csv", "vertices.csv", "report.json"] {
        assert!(out.join(f).exists());
    }
    let v = parse_rows(
        &std::fs::read_to_string(out.join("vertices.csv")).unwrap(),
        false,
    )
    .unwrap();
    let e = std::fs::read_to_string(out.join("edges.csv")).unwrap();
    assert_eq!(e.lines().count() - 1, v.len() - 1);
}

#[test]
fn bench_without_time_is_reproducible() {
    let a = run(&[
        "bench",
        "--suite",
        "mst",
        "--sizes",
        "50,200",
        "--seed",
        "3",
        "--no-time",
    ]);
    let b = run(&[
        "bench",
        "--suite",
        "mst",
        "--sizes",
        "50,200",
        "--seed",
        "3",
        "--no-time",
    ]);
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
    assert_eq!(a.1.lines().count(), 3);
}

#[test]
fn stats_json() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "line.csv", "0\n1\n3\n");
    let (code, out, _) = run(&["stats", "--input", &input]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["diameter"], 3.0);
    assert_eq!(v["aspect_ratio"], 3.0);
}

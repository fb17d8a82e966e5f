//! End-to-end runs of the `gqre` binary in scratch directories.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn gqre(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gqre"))
        .args(args)
        .current_dir(dir)
        .env_remove("GQRE_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = gqre(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fails(dir: &Path, args: &[&str]) -> String {
    let out = gqre(dir, args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn gen_matching_pennies_writes_the_textbook_matrices() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["gen", "--game", "matching-pennies", "--out", "mp.json"]);
    let g = json(&tmp.path().join("mp.json"));
    assert_eq!(g["action_counts"], serde_json::json!([2, 2]));
    assert_eq!(g["metadata"]["pre_normalization"], serde_json::json!([[1.0, -1.0, -1.0, 1.0], [-1.0, 1.0, 1.0, -1.0]]));
    // Rescaled into [0, 1].
    assert_eq!(g["utilities"], serde_json::json!([[1.0, 0.0, 0.0, 1.0], [0.0, 1.0, 1.0, 0.0]]));
}

#[test]
fn gen_is_deterministic_per_seed() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["gen", "--game", "monotone", "--n", "6", "--seed", "3", "--out", "a.json"]);
    ok(d, &["gen", "--game", "monotone", "--n", "6", "--seed", "3", "--out", "b.json"]);
    ok(d, &["gen", "--game", "monotone", "--n", "6", "--seed", "4", "--out", "c.json"]);
    let a = std::fs::read(d.join("a.json")).unwrap();
    assert_eq!(a, std::fs::read(d.join("b.json")).unwrap());
    assert_ne!(a, std::fs::read(d.join("c.json")).unwrap());

    let path = ok(d, &["gen", "--game", "rank-k", "--m", "5", "--k", "2", "--seed", "1", "--out-dir", "games"]);
    assert!(path.trim().ends_with("rank-k-m5-k2-s1.json"), "{path}");
    assert!(d.join("games/rank-k-m5-k2-s1.json").exists());
}

#[test]
fn solve_writes_one_row_per_iteration_and_reruns_identically() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["gen", "--game", "matching-pennies", "--out", "mp.json"]);
    let args = |out: &'static str| {
        vec![
            "solve", "--game", "mp.json", "--algorithm", "smoothed-fw", "--algorithm", "ogd", "--iterations", "40",
            "--seeds", "3", "--samples", "20", "--out-dir", out,
        ]
    };
    ok(d, &args("r1"));
    let mut again = args("r2");
    again.extend(["--workers", "1"]);
    ok(d, &again);

    let csv1 = std::fs::read_to_string(d.join("r1/trajectories.csv")).unwrap();
    let csv2 = std::fs::read_to_string(d.join("r2/trajectories.csv")).unwrap();
    assert_eq!(csv1, csv2, "worker count must not change outputs");
    let mut lines = csv1.lines();
    assert_eq!(
        lines.next().unwrap(),
        "run_id,algorithm,game_id,seed,iteration,gamma,epsilon,M,oracle_calls,smoothed_gap,nash_gap,wall_ms"
    );
    assert_eq!(lines.count(), 2 * 3 * 40);

    let m = json(&d.join("r1/manifest.json"));
    assert_eq!(m["runs"].as_array().unwrap().len(), 6);
    assert_eq!(m["csv_schema_version"], 1);
    assert_eq!(m["games"][0]["sha256"].as_str().unwrap().len(), 64);
    let m2 = json(&d.join("r2/manifest.json"));
    assert_eq!(m["runs"], m2["runs"]);
    assert_eq!(m["games"], m2["games"]);
}

#[test]
fn timing_fills_wall_clock_column_only_on_request() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["gen", "--game", "matching-pennies", "--out", "mp.json"]);
    ok(d, &["solve", "--game", "mp.json", "--iterations", "5", "--out-dir", "plain"]);
    ok(d, &["solve", "--game", "mp.json", "--iterations", "5", "--out-dir", "timed", "--timing"]);
    let plain = std::fs::read_to_string(d.join("plain/trajectories.csv")).unwrap();
    let timed = std::fs::read_to_string(d.join("timed/trajectories.csv")).unwrap();
    assert!(plain.lines().skip(1).all(|l| l.ends_with(',')));
    assert!(timed.lines().skip(1).all(|l| !l.ends_with(',')));
}

#[test]
fn unknown_algorithm_lists_the_known_ones() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["gen", "--game", "matching-pennies", "--out", "mp.json"]);
    let err = fails(d, &["solve", "--game", "mp.json", "--algorithm", "simplex"]);
    assert!(err.contains("simplex"), "{err}");
    for name in ["smoothed-fw", "hard-fw", "extragradient", "ogd", "pgd"] {
        assert!(err.contains(name), "{name} missing from: {err}");
    }
}

#[test]
fn empty_algorithm_list_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    std::fs::write(
        d.join("exp.toml"),
        "iterations = 10\ngradient_mode = \"exact\"\nalgorithms = []\n\n[seeds]\ncount = 1\n\n[regularizer]\nkind = \"entropy\"\nlambda = 1.0\n\n[[games]]\ngenerator = \"matching-pennies\"\n",
    )
    .unwrap();
    let err = fails(d, &["solve", "--config", "exp.toml", "--out-dir", "o"]);
    assert!(err.contains("algorithm"), "{err}");
}

#[test]
fn verify_reports_uniform_as_equilibrium_of_matching_pennies() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["gen", "--game", "matching-pennies", "--out", "mp.json"]);
    std::fs::write(d.join("uniform.json"), "[[0.5, 0.5], [0.5, 0.5]]").unwrap();
    std::fs::write(d.join("pure.json"), "{\"distributions\": [[1.0, 0.0], [1.0, 0.0]]}").unwrap();
    std::fs::write(d.join("bad.json"), "[[0.5, 0.4], [0.5, 0.5]]").unwrap();

    let r: serde_json::Value = serde_json::from_str(&ok(d, &["verify", "--game", "mp.json", "--profile", "uniform.json"])).unwrap();
    assert_eq!(r["is_gqre"], true);
    assert!(r["V"].as_f64().unwrap() < 1e-12);

    let r: serde_json::Value = serde_json::from_str(&ok(d, &["verify", "--game", "mp.json", "--profile", "pure.json"])).unwrap();
    assert_eq!(r["is_gqre"], false);

    let err = fails(d, &["verify", "--game", "mp.json", "--profile", "bad.json"]);
    assert!(err.contains("bad.json"), "{err}");
}

#[test]
fn respond_prints_the_logit_response() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    assert_eq!(ok(d, &["respond", "--u", "1,0", "--digits", "5"]).trim(), "0.73106, 0.26894");
    assert_eq!(ok(d, &["respond", "--u", "-3,2,7", "--lambda", "0", "--digits", "4"]).trim(), "0.3333, 0.3333, 0.3333");
    let err = fails(d, &["respond", "--u", "1,0", "--kind", "renyi", "--alpha", "1.5"]);
    assert!(err.to_lowercase().contains("alpha"), "{err}");
}

#[test]
fn bench_smoke_run_writes_games_summary_and_manifest() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    std::fs::write(
        d.join("small.toml"),
        r#"
iterations = 15
gradient_mode = "oracle"
algorithms = ["smoothed-fw", "pgd"]

[seeds]
count = 2

[regularizer]
kind = "entropy"
lambda = 1.0

[schedules.default]
step = 0.1
floor = 0.01
samples = 10

[[games]]
generator = "matching-pennies"

[[games]]
generator = "monotone"
sizes = [3, 4]
seed = 5
"#,
    )
    .unwrap();
    ok(d, &["bench", "--config", "small.toml", "--out-dir", "b"]);
    let out = d.join("b");
    assert!(out.join("games/monotone-n3-s5.json").exists());
    assert!(out.join("games/monotone-n4-s5.json").exists());
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 3 * 2);
    let rows = std::fs::read_to_string(out.join("trajectories.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 3 * 2 * 2 * 15);
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["command"], "bench");
    assert_eq!(m["games"].as_array().unwrap().len(), 3);
}

#[test]
fn out_dir_defaults_from_environment() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let out = Command::new(env!("CARGO_BIN_EXE_gqre"))
        .args(["gen", "--game", "matching-pennies"])
        .current_dir(d)
        .env("GQRE_OUT_DIR", "from-env")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(d.join("from-env/matching-pennies.json").exists());
}

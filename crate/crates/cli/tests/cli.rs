//! End-to-end checks of the `slb` binary: output files, CSV round trips,
//! manifest replay, and argument validation.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn slb(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slb"))
        .args(args)
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .expect("spawning slb")
}

fn parse_csv(path: &Path) -> (Vec<String>, usize) {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let headers: Vec<String> = reader.headers().unwrap().iter().map(str::to_string).collect();
    let rows = reader.records().map(|r| r.unwrap()).count();
    (headers, rows)
}

#[test]
fn ds_writes_parseable_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out = slb(dir.path(), &["ds"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let (headers, rows) = parse_csv(&dir.path().join("curves.csv"));
    assert_eq!(headers, ["x", "y2_slb", "y2_trad", "y2_fs"]);
    assert_eq!(rows, 19);

    let (headers, rows) = parse_csv(&dir.path().join("error_sweep.csv"));
    assert_eq!(headers[..3], ["x_slb".to_string(), "xi_t".to_string(), "xi_e".to_string()]);
    assert!(rows > 0);

    let (headers, rows) = parse_csv(&dir.path().join("sampling_bounds.csv"));
    assert_eq!(headers.len(), 9);
    assert_eq!(rows, 3);

    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn plan_compiles_a_collider_graph() {
    let dir = tempfile::tempdir().unwrap();
    let graph = serde_json::json!({
        "nodes": [
            {"id": "A", "observable": true, "state_kind": "transient"},
            {"id": "B", "observable": true, "state_kind": "transient"},
            {"id": "C", "observable": true, "state_kind": "transient"},
        ],
        "edges": [
            {"cause": "A", "effect": "C", "mean": 2.0, "low": 1.5, "high": 2.5},
            {"cause": "B", "effect": "C", "mean": 4.0, "low": 3.0, "high": 5.0},
        ],
    });
    let graph_path = dir.path().join("graph.json");
    fs::write(&graph_path, serde_json::to_vec(&graph).unwrap()).unwrap();

    let out = slb(
        dir.path(),
        &["plan", "--graph", graph_path.to_str().unwrap(), "--cause", "A", "--effect", "C"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let plan: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("plan.json")).unwrap()).unwrap();
    let bindings = plan["itm_bindings"].as_array().unwrap();
    assert_eq!(bindings.len(), 2, "both transient causes need a binding");
    assert!(fs::read_to_string(dir.path().join("summary.txt")).unwrap().contains("A"));
}

#[test]
fn cost_replays_byte_identically_from_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let out = slb(&first, &["cost", "--acc-ratios", "0,0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let replay = dir.path().join("replay");
    let manifest = first.join("manifest.json");
    let out = slb(&replay, &["--from-manifest", manifest.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let a = fs::read(first.join("cost_sweep.csv")).unwrap();
    let b = fs::read(replay.join("cost_sweep.csv")).unwrap();
    assert_eq!(a, b);

    // acc_ratio = 0 rows solve to a zero-hour threshold
    let mut reader = csv::Reader::from_reader(a.as_slice());
    for record in reader.deserialize::<(f64, f64, f64, f64)>() {
        let (_, _, acc_ratio, t) = record.unwrap();
        if acc_ratio == 0.0 {
            assert_eq!(t, 0.0);
        }
    }
}

#[test]
fn manifest_flag_excludes_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let out = slb(dir.path(), &["cost", "--from-manifest", "whatever.json"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("one or the other"));
}

#[test]
fn missing_subcommand_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = slb(dir.path(), &[]);
    assert!(!out.status.success());
}

#[test]
fn out_dir_env_var_is_the_default() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_slb"))
        .args(["cost"])
        .env("SLB_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("cost_sweep.csv").exists());
}

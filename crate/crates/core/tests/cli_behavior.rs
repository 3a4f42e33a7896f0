//! Exit codes and basic flows of the `planfolio` binary.

use std::path::Path;
use std::process::Command;

fn planfolio() -> Command {
    Command::new(env!("CARGO_BIN_EXE_planfolio"))
}

#[test]
fn zero_problem_count_is_an_argument_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = planfolio()
        .args(["gen", "--type", "nav2d", "--n", "0", "--seed", "1"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = planfolio().args(["gen", "--frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_dataset_is_a_missing_artifact_error() {
    let out = planfolio()
        .args(["solve", "--dataset", "/nonexistent-dataset"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_experiment_is_an_argument_error() {
    let dir = tempfile::tempdir().unwrap();
    let gen = planfolio()
        .args(["gen", "--type", "nav2d", "--n", "4", "--seed", "1"])
        .arg("--out")
        .arg(dir.path().join("data"))
        .output()
        .unwrap();
    assert!(gen.status.success());
    let out = planfolio()
        .args(["eval", "--experiment", "nonsense"])
        .args(["--dataset"])
        .arg(dir.path().join("data"))
        .args(["--labels", "/nonexistent"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_solve_filter_and_dump_graph_flow() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let solve_dir = dir.path().join("solve");

    let gen = planfolio()
        .args(["gen", "--type", "nav2d", "--n", "6", "--seed", "21"])
        .arg("--out")
        .arg(&data)
        .output()
        .unwrap();
    assert!(gen.status.success());
    assert!(data.join("manifest.json").exists());
    assert!(data.join("config.txt").exists());

    // Planner filter: labels only for rrtconnect.
    let solve = planfolio()
        .args(["solve", "--planners", "rrtconnect", "--trials", "2"])
        .args(["--timeout", "0.3", "--seed", "4"])
        .args(["--dataset"])
        .arg(&data)
        .arg("--out")
        .arg(&solve_dir)
        .output()
        .unwrap();
    assert!(solve.status.success());
    let labels = std::fs::read_to_string(solve_dir.join("labels.jsonl")).unwrap();
    assert_eq!(labels.lines().count(), 6);
    assert!(labels.lines().all(|l| l.contains("\"rrtconnect\"")));

    // Graph dump of the first problem.
    let first_line = std::fs::read_to_string(data.join("problems.jsonl")).unwrap();
    let first: serde_json::Value =
        serde_json::from_str(first_line.lines().next().unwrap()).unwrap();
    let id = first["id"].as_str().unwrap();
    let dump = planfolio()
        .args(["dump-graph", "--problem-id", id])
        .args(["--dataset"])
        .arg(&data)
        .output()
        .unwrap();
    assert!(dump.status.success());
    let graph: serde_json::Value =
        serde_json::from_slice(&dump.stdout).expect("dump-graph emits JSON");
    assert_eq!(graph["feature_dim"], 8);
}

#[test]
fn config_file_supplies_values_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gen.conf");
    std::fs::write(&cfg, "type = nav2d\nn = 3\nseed = 9 # comment\n").unwrap();
    let out_a = dir.path().join("a");
    let gen = planfolio()
        .args(["gen", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_a)
        .output()
        .unwrap();
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_a.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["count"], 3);
    assert_eq!(manifest["global_seed"], 9);

    // Flag overrides the config file.
    let out_b = dir.path().join("b");
    let gen = planfolio()
        .args(["gen", "--config"])
        .arg(&cfg)
        .args(["--seed", "10"])
        .arg("--out")
        .arg(&out_b)
        .output()
        .unwrap();
    assert!(gen.status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_b.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["global_seed"], 10);
}

#[test]
fn run_dir_is_derived_from_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str| {
        let out = planfolio()
            .env("PLANFOLIO_RUN_DIR", dir.path())
            .args(["gen", "--type", "nav2d", "--n", "2", "--seed", seed])
            .output()
            .unwrap();
        assert!(out.status.success());
        String::from_utf8_lossy(&out.stdout)
            .lines()
            .last()
            .unwrap()
            .trim()
            .to_string()
    };
    let a1 = run("1");
    let a2 = run("1");
    let b = run("2");
    assert_eq!(a1, a2, "same config, same run dir");
    assert_ne!(a1, b, "different config, different run dir");
}

/// Strips fields that hold measured wall time; everything else must be
/// byte-identical across reruns.
fn canonical_labels(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    let mut out = String::new();
    for line in text.lines() {
        let mut v: serde_json::Value = serde_json::from_str(line).unwrap();
        v["expected_time_s"] = 0.0.into();
        for t in v["trials"].as_array_mut().unwrap() {
            t["wall_time_s"] = 0.0.into();
        }
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out
}

#[test]
fn interrupted_solve_resumes_to_the_same_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    planfolio()
        .args(["gen", "--type", "nav2d", "--n", "4", "--seed", "2"])
        .arg("--out")
        .arg(&data)
        .output()
        .unwrap();

    // Reference: one uninterrupted run.
    let full = dir.path().join("full");
    planfolio()
        .args(["solve", "--trials", "2", "--timeout", "0.3", "--seed", "1"])
        .args(["--dataset"])
        .arg(&data)
        .arg("--out")
        .arg(&full)
        .output()
        .unwrap();

    // "Interrupted": first measure a subset (rrt only), then the full set;
    // the resumed file must contain the same records as a fresh full run,
    // with the subset's records first.
    let resumed = dir.path().join("resumed");
    planfolio()
        .args(["solve", "--trials", "2", "--timeout", "0.3", "--seed", "1"])
        .args(["--planners", "rrt"])
        .args(["--dataset"])
        .arg(&data)
        .arg("--out")
        .arg(&resumed)
        .output()
        .unwrap();
    planfolio()
        .args(["solve", "--trials", "2", "--timeout", "0.3", "--seed", "1"])
        .args(["--dataset"])
        .arg(&data)
        .arg("--out")
        .arg(&resumed)
        .output()
        .unwrap();

    let full_records: std::collections::BTreeSet<String> = canonical_labels(
        &full.join("labels.jsonl"),
    )
    .lines()
    .map(String::from)
    .collect();
    let resumed_records: std::collections::BTreeSet<String> =
        canonical_labels(&resumed.join("labels.jsonl"))
            .lines()
            .map(String::from)
            .collect();
    assert_eq!(full_records, resumed_records);
}

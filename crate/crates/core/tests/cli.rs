mod common;

use std::process::{Command, Output};

use common::scenario_path;

fn apbda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_apbda")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn route_prints_the_single_edge_path() {
    let s = scenario_path("two_node.toml");
    let o = apbda(&["route", s.to_str().unwrap(), "--from", "client", "--to", "worker", "--complexity", "3", "--priority", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("path: client -> worker"), "{text}");
    // 3/2 + 2/0.8 + 2/10 + 2*2 + 0.2/2 + 1/2 + 1/0.99
    let expect = 1.5 + 2.0 / 0.8 + 0.2 + 4.0 + 0.1 + 0.5 + 1.0 / 0.99;
    let total: f64 = text.lines().find_map(|l| l.strip_prefix("total_cost: ")).unwrap().parse().unwrap();
    assert!((total - expect).abs() < 1e-12, "{total} vs {expect}");
    assert_eq!(stdout(&apbda(&["route", s.to_str().unwrap(), "--from", "client", "--to", "worker", "--complexity", "3", "--priority", "2"])), text);
}

#[test]
fn explain_terms_sum_to_the_total() {
    let s = scenario_path("worked_example.toml");
    let o = apbda(&["route", s.to_str().unwrap(), "--from", "dispatcher", "--to", "solver", "--complexity", "4", "--priority", "2", "--explain"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let weighted: Vec<f64> = text
        .lines()
        .filter_map(|l| l.split("weighted=").nth(1))
        .map(|v| v.trim().parse().unwrap())
        .collect();
    assert_eq!(weighted, vec![2.0, 4.0, 0.5, 6.0, 0.5, 0.5, 2.0]);
    let total: f64 = text.lines().find_map(|l| l.strip_prefix("total_cost: ")).unwrap().parse().unwrap();
    assert_eq!(weighted.iter().fold(0.0, |a, w| a + w), total);
    assert_eq!(total, 15.5);
}

#[test]
fn unreachable_exits_with_two() {
    let s = scenario_path("two_node.toml");
    let o = apbda(&["route", s.to_str().unwrap(), "--from", "worker", "--to", "client"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("unreachable"));
}

#[test]
fn invalid_files_exit_with_one_and_a_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(scenario_path("two_node.toml")).unwrap().replace("latency = 2.0", "latency = 2.0\nlatencyy = 1.0");
    std::fs::write(&bad, text).unwrap();
    let o = apbda(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line ") && err.contains("latencyy"), "{err}");

    let o = apbda(&["route", bad.to_str().unwrap(), "--from", "client", "--to", "worker"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(apbda(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn validate_accepts_bundled_scenarios() {
    for name in ["two_node.toml", "worked_example.toml", "demo.toml", "two_regime.toml"] {
        let o = apbda(&["validate", scenario_path(name).to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{name}");
        assert!(stdout(&o).starts_with("ok:"));
    }
}

#[test]
fn verify_batches() {
    let o = apbda(&["verify", "--instances", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let o = apbda(&["verify", "--instances", "200", "--nodes", "6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = apbda(&["verify", "--instances", "200", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("mismatch: instance"));
    assert!(stdout(&o).contains(" seed "));
    assert_eq!(apbda(&["verify", "--nodes", "11"]).status.code(), Some(1));
}

#[test]
fn simulate_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario_path("demo.toml");
    let q = dir.path().join("q.json");
    let o = apbda(&["simulate", s.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--qtable", q.to_str().unwrap(), "--hierarchical"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["header"]["overrides"][0], "--hierarchical");
    assert!(summary["stats"]["tasks"].as_u64().unwrap() > 0);
    let lines = std::fs::read_to_string(dir.path().join("outcomes.jsonl")).unwrap();
    for line in lines.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["record"] == "task_outcome" || v["record"] == "reward");
    }
    let table: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(q).unwrap()).unwrap();
    assert_eq!(table["values"].as_array().unwrap().len(), 81);
}

#[test]
fn zero_duration_gives_header_only_summary() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario_path("two_node.toml")).unwrap() + "\n[sim]\nduration = 0\n";
    let path = dir.path().join("zero.toml");
    std::fs::write(&path, text).unwrap();
    let out = dir.path().join("out");
    let o = apbda(&["simulate", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(out.join("outcomes.jsonl")).unwrap(), "");
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary.get("stats").is_none());
    assert!(summary.get("header").is_some());
}

#[test]
fn simulate_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario_path("demo.toml");
    let mut files = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        assert_eq!(apbda(&["simulate", s.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.code(), Some(0));
        files.push((std::fs::read(out.join("outcomes.jsonl")).unwrap(), std::fs::read(out.join("summary.json")).unwrap()));
    }
    assert_eq!(files[0], files[1]);
}

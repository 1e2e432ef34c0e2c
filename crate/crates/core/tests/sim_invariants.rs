mod common;

use std::collections::BTreeMap;

use apbda::rl::RlConfig;
use apbda::scenario::load_scenario;
use apbda::sim::{percentile, read_records, run, run_with, Record, RunOptions, Scenario, TaskOutcome, WindowRecord};
use common::scenario_path;

fn demo() -> Scenario {
    let mut s = load_scenario(scenario_path("demo.toml")).unwrap();
    s.sim.duration = 600;
    s
}

fn export(s: &Scenario) -> Vec<u8> {
    let mut buf = Vec::new();
    run(s).unwrap().write_records(&mut buf).unwrap();
    buf
}

fn gini_sorted(values: &[f64]) -> f64 {
    // rank formula, independent of the pairwise sum used by the library
    let n = values.len();
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let sum: f64 = v.iter().sum();
    if n < 2 || sum <= 0.0 {
        return 0.0;
    }
    let weighted: f64 = v.iter().enumerate().map(|(i, x)| (2.0 * (i as f64 + 1.0) - n as f64 - 1.0) * x).sum();
    (weighted / (n as f64 * sum) * n as f64 / (n as f64 - 1.0)).clamp(0.0, 1.0)
}

fn recompute(w: &WindowRecord, by_id: &BTreeMap<u64, TaskOutcome>, cfg: &RlConfig) -> f64 {
    let tasks: Vec<&TaskOutcome> = w.task_ids.iter().map(|id| &by_id[id]).collect();
    let high: Vec<&&TaskOutcome> = tasks.iter().filter(|o| o.priority >= cfg.high_priority_threshold).collect();
    let done: Vec<f64> = high.iter().filter(|o| o.succeeded).map(|o| o.completion_time as f64).collect();
    let hp = if high.is_empty() {
        1.0
    } else if done.is_empty() {
        0.0
    } else {
        1.0 / (1.0 + done.iter().sum::<f64>() / done.len() as f64)
    };
    let loads: Vec<f64> = w.agent_loads.iter().map(|a| a.load_factor).collect();
    let fair = 1.0 - gini_sorted(&loads);
    let rel = tasks.iter().filter(|o| o.succeeded).count() as f64 / tasks.len() as f64;
    cfg.alpha * hp + cfg.beta * fair + cfg.gamma * rel
}

#[test]
fn every_task_has_exactly_one_outcome() {
    let s = demo();
    let tasks = s.generate_workload().unwrap();
    let report = run(&s).unwrap();
    let mut ids: Vec<u64> = report.outcomes.iter().map(|o| o.task_id).collect();
    ids.sort_unstable();
    assert_eq!(ids, tasks.iter().map(|t| t.id).collect::<Vec<_>>());
    for o in &report.outcomes {
        assert!(o.completion_tick >= o.dispatch_tick);
        assert_eq!(o.completion_time, o.completion_tick - o.dispatch_tick);
        assert!(o.succeeded || o.failure_node.is_some() || o.path.len() == 1);
    }
}

#[test]
fn completion_ticks_never_go_backwards() {
    let report = run(&demo()).unwrap();
    assert!(report.outcomes.windows(2).all(|p| p[0].completion_tick <= p[1].completion_tick));
}

#[test]
fn perfectly_reliable_agents_never_fail() {
    let mut s = demo();
    s.filter.enabled = false;
    for n in s.graph.nodes_mut() {
        n.reliability = 1.0;
    }
    let report = run(&s).unwrap();
    assert!(!report.outcomes.is_empty());
    assert!(report.outcomes.iter().all(|o| o.succeeded));
}

#[test]
fn same_seed_same_bytes() {
    let s = demo();
    assert_eq!(export(&s), export(&s));
}

#[test]
fn rl_seed_leaves_the_workload_alone() {
    let a = demo();
    let mut b = a.clone();
    b.sim.rl_seed = Some(999);
    assert_eq!(a.generate_workload().unwrap(), b.generate_workload().unwrap());
    let key = |s: &Scenario| {
        let mut v: Vec<(u64, u64, u64, u64)> = run(s)
            .unwrap()
            .outcomes
            .iter()
            .map(|o| (o.task_id, o.dispatch_tick, o.priority.to_bits(), o.complexity.to_bits()))
            .collect();
        v.sort_unstable();
        v
    };
    assert_eq!(key(&a), key(&b));
    assert_ne!(export(&a), export(&b), "exploration stream should matter");
}

#[test]
fn rewards_recompute_from_the_exported_records() {
    let s = demo();
    let bytes = export(&s);
    let records = read_records(bytes.as_slice()).unwrap();
    let mut by_id = BTreeMap::new();
    let mut windows = Vec::new();
    for r in records {
        match r {
            Record::TaskOutcome(o) => {
                by_id.insert(o.task_id, o);
            }
            Record::Reward(w) => {
                // every task of a window precedes its reward record
                assert!(w.task_ids.iter().all(|id| by_id.contains_key(id)));
                windows.push(w);
            }
        }
    }
    assert!(windows.len() >= 5);
    for w in &windows {
        assert_eq!(w.task_ids.len(), s.rl.window);
        let expect = recompute(w, &by_id, &s.rl);
        assert!((w.reward - expect).abs() <= 1e-12, "window {}: {} vs {}", w.window_id, w.reward, expect);
    }
}

#[test]
fn summary_recomputes_from_outcomes() {
    let s = demo();
    let report = run(&s).unwrap();
    let stats = report.summary(s.rl.high_priority_threshold).stats.unwrap();
    let ok: Vec<&TaskOutcome> = report.outcomes.iter().filter(|o| o.succeeded).collect();
    let mut times: Vec<f64> = ok.iter().map(|o| o.completion_time as f64).collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(stats.tasks, report.outcomes.len());
    assert_eq!(stats.succeeded, ok.len());
    let mean = times.iter().sum::<f64>() / times.len() as f64;
    assert!((stats.mean_completion_time.unwrap() - mean).abs() < 1e-9);
    let nearest = |q: f64| times[((q / 100.0 * times.len() as f64).ceil() as usize).max(1) - 1];
    assert_eq!(stats.p90_completion_time, Some(nearest(90.0)));
    assert_eq!(percentile(&times, 50.0), Some(nearest(50.0)));
}

#[test]
fn no_filter_matches_a_scenario_without_filter() {
    let s = demo();
    let mut plain = s.clone();
    plain.filter.enabled = false;
    let a = run_with(&s, RunOptions { no_filter: true, ..RunOptions::default() }).unwrap();
    let b = run(&plain).unwrap();
    assert_eq!(a.outcomes, b.outcomes);
    assert_eq!(a.header.overrides, vec!["--no-filter".to_string()]);
}

#[test]
fn hierarchical_runs_record_cost_ratios() {
    let report = run(&demo()).unwrap();
    assert!(report.header.hierarchical);
    assert!(!report.cost_ratios.is_empty());
    assert!(report.cost_ratios.iter().all(|&r| r >= 1.0 - 1e-9));
}

#[test]
fn weights_stay_in_bounds() {
    let s = demo();
    let report = run(&s).unwrap();
    for w in &report.windows {
        assert!(w.weights.0.iter().all(|&x| (s.rl.w_min..=s.rl.w_max).contains(&x)));
    }
}

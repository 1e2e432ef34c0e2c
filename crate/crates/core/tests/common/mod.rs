#![allow(dead_code)]

use std::path::PathBuf;

use apbda::model::{AgentGraph, Task, WeightVector};
use apbda::oracle::{random_instance, MetricRanges};
use apbda::verify::DENSITIES;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

pub fn instance(nodes: usize, density_slot: usize, seed: u64) -> (AgentGraph, Task, WeightVector) {
    let density = DENSITIES[density_slot % DENSITIES.len()];
    random_instance(nodes, density, &MetricRanges::default(), seed).expect("valid parameters")
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

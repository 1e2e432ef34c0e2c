//! Seeded batches comparing the router against the exhaustive oracle.

use serde::Serialize;

use crate::model::{AgentGraph, RouteResult, Task, WeightVector};
use crate::oracle::{exhaustive_best_path, random_instance, MetricRanges, OracleError, MAX_ORACLE_NODES};
use crate::router::RouteError;

/// Relative tolerance for total-cost agreement.
pub const REL_TOL: f64 = 1e-9;

/// Edge densities cycled through by [`verify_batch`].
pub const DENSITIES: [f64; 3] = [0.3, 0.6, 1.0];

pub type RouterFn = fn(&AgentGraph, &Task, &WeightVector) -> Result<RouteResult, RouteError>;

pub fn relative_eq(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mismatch {
    pub instance: usize,
    pub seed: u64,
    pub nodes: usize,
    pub density: f64,
    pub router_total: Option<f64>,
    pub oracle_total: Option<f64>,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    pub instances: usize,
    pub passed: usize,
    pub unreachable: usize,
    pub mismatches: Vec<Mismatch>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Parameters of instance `i` of a batch: seed `seed + i`, node count
/// cycling through `2..=max_nodes`, density cycling through [`DENSITIES`].
pub fn instance_params(max_nodes: usize, seed: u64, i: usize) -> (u64, usize, f64) {
    let span = max_nodes.saturating_sub(1).max(1);
    (seed.wrapping_add(i as u64), 2 + i % span, DENSITIES[i % DENSITIES.len()])
}

/// Checks one routed result against the oracle's answer. Returns the
/// reason for disagreement, if any.
pub fn compare(
    graph: &AgentGraph,
    task: &Task,
    weights: &WeightVector,
    routed: &Result<RouteResult, RouteError>,
    oracle: &Option<RouteResult>,
) -> Option<String> {
    match (routed, oracle) {
        (Err(e), None) if e.is_unreachable() => None,
        (Err(e), _) => Some(format!("router error: {e}")),
        (Ok(_), None) => Some("router found a path the oracle did not".into()),
        (Ok(r), Some(o)) => {
            if !relative_eq(r.total_cost, o.total_cost, REL_TOL) {
                return Some(format!("total {} != oracle {}", r.total_cost, o.total_cost));
            }
            if r.path.first() != Some(&task.source) || r.path.last() != Some(&task.destination) {
                return Some("path endpoints do not match the task".into());
            }
            // re-score the router's path independently
            let mut total = 0.0;
            for hop in r.path.windows(2) {
                let (Some(from), Some(to), Some(link)) =
                    (graph.node(hop[0]), graph.node(hop[1]), graph.link(hop[0], hop[1]))
                else {
                    return Some(format!("path uses missing link {} -> {}", hop[0], hop[1]));
                };
                match crate::cost::compute_cost(task, from, to, link, weights) {
                    Ok(c) => total += c.total,
                    Err(e) => return Some(e.to_string()),
                }
            }
            if !relative_eq(total, o.total_cost, REL_TOL) {
                return Some(format!("path re-scores to {total}, oracle {}", o.total_cost));
            }
            None
        }
    }
}

/// Runs `instances` seeded comparisons of `router` against the oracle.
pub fn verify_batch(
    max_nodes: usize,
    instances: usize,
    seed: u64,
    router: RouterFn,
) -> Result<VerifyReport, OracleError> {
    if !(2..=MAX_ORACLE_NODES).contains(&max_nodes) {
        return Err(OracleError::InvalidParams(format!(
            "node count must be between 2 and {MAX_ORACLE_NODES}"
        )));
    }
    let ranges = MetricRanges::default();
    let mut report = VerifyReport {
        instances,
        ..VerifyReport::default()
    };
    for i in 0..instances {
        let (s, nodes, density) = instance_params(max_nodes, seed, i);
        let (graph, task, weights) = random_instance(nodes, density, &ranges, s)?;
        let oracle = exhaustive_best_path(&graph, &task, &weights)?;
        let routed = router(&graph, &task, &weights);
        match compare(&graph, &task, &weights, &routed, &oracle) {
            None => {
                report.passed += 1;
                if oracle.is_none() {
                    report.unreachable += 1;
                }
            }
            Some(reason) => report.mismatches.push(Mismatch {
                instance: i,
                seed: s,
                nodes,
                density,
                router_total: routed.as_ref().ok().map(|r| r.total_cost),
                oracle_total: oracle.as_ref().map(|o| o.total_cost),
                reason,
            }),
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::router::{route, route_fault_injected};

    #[test]
    fn empty_batch_passes() {
        let r = verify_batch(8, 0, 0, route).unwrap();
        assert!(r.all_passed());
        assert_eq!(r.passed, 0);
    }

    #[test]
    fn small_batch_passes() {
        let r = verify_batch(6, 150, 11, route).unwrap();
        assert!(r.all_passed(), "{:?}", r.mismatches.first());
        assert_eq!(r.passed, 150);
    }

    #[test]
    fn fault_injection_is_caught() {
        let r = verify_batch(8, 200, 0, route_fault_injected).unwrap();
        assert!(!r.all_passed());
    }

    #[test]
    fn node_guard() {
        assert!(verify_batch(11, 1, 0, route).is_err());
        assert!(verify_batch(1, 1, 0, route).is_err());
    }

    #[test]
    fn relative_tolerance() {
        assert!(relative_eq(1.0, 1.0 + 1e-12, REL_TOL));
        assert!(!relative_eq(1.0, 1.0 + 1e-6, REL_TOL));
        assert!(relative_eq(0.0, 0.0, REL_TOL));
    }
}

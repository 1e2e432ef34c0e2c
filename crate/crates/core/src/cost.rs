//! Seven-term adaptive edge cost.
//!
//! For a task with complexity `T` and priority `P`, moving from agent `i` to
//! agent `j` over link `ij` costs
//!
//! ```text
//! w1·T/C_j + w2·P/A_j + w3·P/B_ij + w4·P·L_ij + w5·F_j/C_j + w6/M_j + w7/R_j
//! ```
//!
//! Only destination-node attributes and link attributes enter the cost.
//! Terms are summed left to right in the order above so totals are
//! bit-reproducible.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::model::{AgentGraph, AgentNode, Link, NodeId, Task, WeightVector, TERM_COUNT};

/// Floor applied to availability, reliability and bandwidth before division.
pub const EPS_DIV: f64 = 1e-6;

/// Names of the seven terms, in summation order.
pub const TERM_NAMES: [&str; TERM_COUNT] = [
    "complexity/capability",
    "priority/availability",
    "priority/bandwidth",
    "priority*latency",
    "load/capability",
    "1/sophistication",
    "1/reliability",
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CostError {
    #[error("invalid metric {metric} = {value} on {location}")]
    InvalidMetric {
        metric: &'static str,
        value: f64,
        location: String,
    },
    #[error("link {from} -> {to} does not connect the given nodes")]
    Mismatch { from: NodeId, to: NodeId },
}

/// One weighted summand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostTerm {
    pub name: &'static str,
    pub raw: f64,
    pub weighted: f64,
}

/// Per-term attribution of one edge cost.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub terms: [CostTerm; TERM_COUNT],
    pub total: f64,
}

fn clamp_div(v: f64) -> f64 {
    if v.is_nan() {
        v
    } else {
        v.max(EPS_DIV)
    }
}

fn require(
    metric: &'static str,
    value: f64,
    ok: bool,
    location: impl FnOnce() -> String,
) -> Result<f64, CostError> {
    if ok {
        Ok(value)
    } else {
        Err(CostError::InvalidMetric {
            metric,
            value,
            location: location(),
        })
    }
}

/// Evaluates the cost of the hop `from -> to` over `link` for `task`.
///
/// Availability, reliability and bandwidth are clamped to [`EPS_DIV`].
/// Capability and model sophistication are never clamped: a non-positive
/// value is an error.
pub fn compute_cost(
    task: &Task,
    from: &AgentNode,
    to: &AgentNode,
    link: &Link,
    weights: &WeightVector,
) -> Result<CostBreakdown, CostError> {
    if link.from != from.id || link.to != to.id {
        return Err(CostError::Mismatch {
            from: link.from,
            to: link.to,
        });
    }
    let node = || format!("node {}", to.id);
    let edge = || format!("link {} -> {}", link.from, link.to);
    let t = task.complexity;
    let p = task.priority;
    let capability = require("capability", to.capability, to.capability > 0.0, node)?;
    let sophistication = require(
        "model_sophistication",
        to.model_sophistication,
        to.model_sophistication > 0.0,
        node,
    )?;
    let availability = clamp_div(to.availability);
    let reliability = clamp_div(to.reliability);
    let bandwidth = clamp_div(link.bandwidth);
    require("availability", to.availability, availability > 0.0, node)?;
    require("reliability", to.reliability, reliability > 0.0, node)?;
    require("bandwidth", link.bandwidth, bandwidth > 0.0, edge)?;

    let raw = [
        t / capability,
        p / availability,
        p / bandwidth,
        p * link.latency,
        to.load_factor / capability,
        1.0 / sophistication,
        1.0 / reliability,
    ];
    let mut total = 0.0;
    let terms = std::array::from_fn(|i| {
        let weighted = weights.0[i] * raw[i];
        total += weighted;
        CostTerm {
            name: TERM_NAMES[i],
            raw: raw[i],
            weighted,
        }
    });
    Ok(CostBreakdown { terms, total })
}

/// Cost of every directed link of `graph` for `task`.
pub fn cost_matrix(
    graph: &AgentGraph,
    task: &Task,
    weights: &WeightVector,
) -> Result<BTreeMap<(NodeId, NodeId), f64>, CostError> {
    let mut out = BTreeMap::new();
    for link in graph.links() {
        let (Some(from), Some(to)) = (graph.node(link.from), graph.node(link.to)) else {
            return Err(CostError::Mismatch {
                from: link.from,
                to: link.to,
            });
        };
        let cost = compute_cost(task, from, to, link, weights)?;
        out.insert((link.from, link.to), cost.total);
    }
    Ok(out)
}

/// Breakdowns of each hop along `path`, for explaining a route.
pub fn explain_path(
    graph: &AgentGraph,
    task: &Task,
    weights: &WeightVector,
    path: &[NodeId],
) -> Result<Vec<CostBreakdown>, CostError> {
    path.windows(2)
        .map(|hop| {
            let link = graph.link(hop[0], hop[1]).ok_or(CostError::Mismatch {
                from: hop[0],
                to: hop[1],
            })?;
            let from = graph.node(hop[0]).expect("link endpoint exists");
            let to = graph.node(hop[1]).expect("link endpoint exists");
            compute_cost(task, from, to, link, weights)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: usize, c: f64, a: f64, f: f64, m: f64, r: f64) -> AgentNode {
        AgentNode {
            id: NodeId(id),
            capability: c,
            availability: a,
            load_factor: f,
            model_sophistication: m,
            reliability: r,
        }
    }

    fn unit_weight(index: usize) -> WeightVector {
        let mut w = WeightVector::uniform(0.0);
        w.set(index, 1.0);
        w
    }

    #[test]
    fn zero_weights_give_zero() {
        let task = Task::new(NodeId(0), NodeId(1), 3.0, 7.0);
        let a = node(0, 1.0, 1.0, 0.0, 1.0, 1.0);
        let b = node(1, 2.0, 0.3, 0.4, 5.0, 0.9);
        let link = Link::new(NodeId(0), NodeId(1), 8.0, 2.0);
        let c = compute_cost(&task, &a, &b, &link, &WeightVector::uniform(0.0)).unwrap();
        assert_eq!(c.total, 0.0);
        assert!(c.terms.iter().all(|t| t.weighted == 0.0));
    }

    #[test]
    fn single_complexity_term() {
        let task = Task::new(NodeId(0), NodeId(1), 10.0, 1.0);
        let a = node(0, 1.0, 1.0, 0.0, 1.0, 1.0);
        let b = node(1, 5.0, 1.0, 0.0, 1.0, 1.0);
        let link = Link::new(NodeId(0), NodeId(1), 1.0, 1.0);
        let c = compute_cost(&task, &a, &b, &link, &unit_weight(1)).unwrap();
        assert_eq!(c.total, 2.0);
    }

    #[test]
    fn worked_example_all_terms() {
        // 2 + 4 + 0.5 + 6 + 0.5 + 0.5 + 2
        let task = Task::new(NodeId(0), NodeId(1), 4.0, 2.0);
        let a = node(0, 1.0, 1.0, 0.0, 1.0, 1.0);
        let b = node(1, 2.0, 0.5, 1.0, 2.0, 0.5);
        let link = Link::new(NodeId(0), NodeId(1), 4.0, 3.0);
        let c = compute_cost(&task, &a, &b, &link, &WeightVector::uniform(1.0)).unwrap();
        let raws: Vec<f64> = c.terms.iter().map(|t| t.raw).collect();
        assert_eq!(raws, vec![2.0, 4.0, 0.5, 6.0, 0.5, 0.5, 2.0]);
        assert_eq!(c.total, 15.5);
    }

    #[test]
    fn latency_term_is_linear_in_priority() {
        let a = node(0, 1.0, 1.0, 0.0, 1.0, 1.0);
        let b = node(1, 1.0, 1.0, 0.0, 1.0, 1.0);
        let link = Link::new(NodeId(0), NodeId(1), 1.0, 2.5);
        let w = unit_weight(4);
        let lo = compute_cost(&Task::new(NodeId(0), NodeId(1), 1.0, 3.0), &a, &b, &link, &w).unwrap();
        let hi = compute_cost(&Task::new(NodeId(0), NodeId(1), 1.0, 6.0), &a, &b, &link, &w).unwrap();
        assert_eq!(hi.total, 2.0 * lo.total);
    }

    #[test]
    fn divisors_are_clamped() {
        let task = Task::new(NodeId(0), NodeId(1), 1.0, 1.0);
        let a = node(0, 1.0, 1.0, 0.0, 1.0, 1.0);
        let b = node(1, 1.0, 0.0, 0.0, 1.0, 0.0);
        let link = Link::new(NodeId(0), NodeId(1), 0.0, 0.0);
        let c = compute_cost(&task, &a, &b, &link, &WeightVector::uniform(1.0)).unwrap();
        assert_eq!(c.terms[1].raw, 1.0 / EPS_DIV);
        assert_eq!(c.terms[2].raw, 1.0 / EPS_DIV);
        assert_eq!(c.terms[6].raw, 1.0 / EPS_DIV);
        assert!(c.total.is_finite());
    }

    #[test]
    fn nonpositive_capability_is_an_error() {
        let task = Task::new(NodeId(0), NodeId(1), 1.0, 1.0);
        let a = node(0, 1.0, 1.0, 0.0, 1.0, 1.0);
        let link = Link::new(NodeId(0), NodeId(1), 1.0, 0.0);
        let w = WeightVector::uniform(1.0);
        let err = compute_cost(&task, &a, &node(1, 0.0, 1.0, 0.0, 1.0, 1.0), &link, &w).unwrap_err();
        assert!(matches!(err, CostError::InvalidMetric { metric: "capability", .. }));
        let err = compute_cost(&task, &a, &node(1, 1.0, 1.0, 0.0, -1.0, 1.0), &link, &w).unwrap_err();
        assert!(matches!(err, CostError::InvalidMetric { metric: "model_sophistication", .. }));
        let err = compute_cost(&task, &a, &node(1, 1.0, f64::NAN, 0.0, 1.0, 1.0), &link, &w).unwrap_err();
        assert!(matches!(err, CostError::InvalidMetric { metric: "availability", .. }));
    }

    #[test]
    fn mismatched_link_is_rejected() {
        let task = Task::new(NodeId(0), NodeId(1), 1.0, 1.0);
        let a = node(0, 1.0, 1.0, 0.0, 1.0, 1.0);
        let b = node(1, 1.0, 1.0, 0.0, 1.0, 1.0);
        let link = Link::new(NodeId(1), NodeId(0), 1.0, 0.0);
        assert!(matches!(
            compute_cost(&task, &a, &b, &link, &WeightVector::default()),
            Err(CostError::Mismatch { .. })
        ));
    }

    #[test]
    fn matrix_matches_per_edge_costs() {
        let mut g = AgentGraph::new();
        g.add_node(node(0, 1.0, 1.0, 0.0, 1.0, 1.0)).unwrap();
        assert!(cost_matrix(&g, &Task::new(NodeId(0), NodeId(0), 1.0, 1.0), &WeightVector::default())
            .unwrap()
            .is_empty());
        g.add_node(node(1, 2.0, 0.5, 1.0, 2.0, 0.5)).unwrap();
        g.add_link(Link::new(NodeId(0), NodeId(1), 4.0, 3.0)).unwrap();
        let task = Task::new(NodeId(0), NodeId(1), 4.0, 2.0);
        let m = cost_matrix(&g, &task, &WeightVector::default()).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[&(NodeId(0), NodeId(1))], 15.5);
    }
}

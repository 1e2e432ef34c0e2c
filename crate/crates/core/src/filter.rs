//! Pre-search pruning of high-latency links and unreliable or unavailable
//! agents.
//!
//! A metric only triggers pruning when it is "consistently" bad: both its
//! current value and its exponentially weighted moving average must cross the
//! threshold. Without a history the average is taken to equal the current
//! value. The task's source and destination are never pruned.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{AgentGraph, NodeId, Task};

/// Per-tick decay of the moving averages kept by [`MetricHistory`].
pub const DEFAULT_EWMA_DECAY: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterPolicy {
    pub enabled: bool,
    pub max_latency: Option<f64>,
    pub min_reliability: Option<f64>,
    pub min_availability: Option<f64>,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        Self {
            enabled: true,
            max_latency: None,
            min_reliability: None,
            min_availability: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolicyError {
    #[error("{field} = {value} is outside {range}")]
    OutOfRange {
        field: &'static str,
        value: f64,
        range: &'static str,
    },
}

impl FilterPolicy {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        let check = |field, value: Option<f64>, ok: fn(f64) -> bool, range| match value {
            Some(v) if !ok(v) => Err(PolicyError::OutOfRange { field, value: v, range }),
            _ => Ok(()),
        };
        check("max_latency", self.max_latency, |v| v.is_finite() && v > 0.0, "(0, inf)")?;
        check("min_reliability", self.min_reliability, |v| v > 0.0 && v <= 1.0, "(0, 1]")?;
        check("min_availability", self.min_availability, |v| v > 0.0 && v <= 1.0, "(0, 1]")
    }

    /// True when applying the policy can remove anything.
    pub fn is_active(&self) -> bool {
        self.enabled
            && (self.max_latency.is_some()
                || self.min_reliability.is_some()
                || self.min_availability.is_some())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct NodeAverages {
    availability: f64,
    reliability: f64,
}

/// Exponentially weighted moving averages of the filtered metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricHistory {
    decay: f64,
    nodes: BTreeMap<NodeId, NodeAverages>,
    latency: BTreeMap<(NodeId, NodeId), f64>,
}

impl Default for MetricHistory {
    fn default() -> Self {
        Self::new(DEFAULT_EWMA_DECAY)
    }
}

impl MetricHistory {
    pub fn new(decay: f64) -> Self {
        Self {
            decay,
            nodes: BTreeMap::new(),
            latency: BTreeMap::new(),
        }
    }

    fn blend(&self, old: Option<f64>, current: f64) -> f64 {
        match old {
            Some(old) => self.decay * old + (1.0 - self.decay) * current,
            None => current,
        }
    }

    /// Folds the graph's current metrics into the averages. The first
    /// observation of a metric initializes its average.
    pub fn observe(&mut self, graph: &AgentGraph) {
        for node in graph.nodes() {
            let old = self.nodes.get(&node.id).copied();
            let averages = NodeAverages {
                availability: self.blend(old.map(|o| o.availability), node.availability),
                reliability: self.blend(old.map(|o| o.reliability), node.reliability),
            };
            self.nodes.insert(node.id, averages);
        }
        for link in graph.links() {
            let key = (link.from, link.to);
            let avg = self.blend(self.latency.get(&key).copied(), link.latency);
            self.latency.insert(key, avg);
        }
    }

    pub fn availability(&self, id: NodeId) -> Option<f64> {
        self.nodes.get(&id).map(|n| n.availability)
    }

    pub fn reliability(&self, id: NodeId) -> Option<f64> {
        self.nodes.get(&id).map(|n| n.reliability)
    }

    pub fn latency(&self, from: NodeId, to: NodeId) -> Option<f64> {
        self.latency.get(&(from, to)).copied()
    }
}

/// Filters `graph` for `task` using current metrics only.
pub fn apply_filter(graph: &AgentGraph, policy: &FilterPolicy, task: &Task) -> AgentGraph {
    apply_filter_with_history(graph, policy, task, None)
}

/// Filters `graph` for `task`. A metric prunes only when both its current
/// value and its moving average in `history` cross the threshold.
pub fn apply_filter_with_history(
    graph: &AgentGraph,
    policy: &FilterPolicy,
    task: &Task,
    history: Option<&MetricHistory>,
) -> AgentGraph {
    if !policy.is_active() {
        return graph.clone();
    }
    let below = |threshold: Option<f64>, current: f64, average: Option<f64>| match threshold {
        Some(t) => current < t && average.unwrap_or(current) < t,
        None => false,
    };
    let mut out = graph.induced(|id| {
        if id == task.source || id == task.destination {
            return true;
        }
        let node = graph.node(id).expect("id from graph");
        let rel = below(
            policy.min_reliability,
            node.reliability,
            history.and_then(|h| h.reliability(id)),
        );
        let avail = below(
            policy.min_availability,
            node.availability,
            history.and_then(|h| h.availability(id)),
        );
        !(rel || avail)
    });
    if let Some(max) = policy.max_latency {
        out.retain_links(|l| {
            let average = history.and_then(|h| h.latency(l.from, l.to)).unwrap_or(l.latency);
            !(l.latency > max && average > max)
        });
    }
    out
}

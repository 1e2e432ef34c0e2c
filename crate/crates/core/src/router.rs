//! Priority-aware Dijkstra search.
//!
//! Edge costs come from [`compute_cost`] at relaxation time, so the same graph
//! routes differently for tasks of different complexity and priority. The
//! search stops as soon as the destination is extracted from the frontier.
//! Equal-key frontier entries pop the lower node id first, and an equal-cost
//! alternative never replaces an existing predecessor.

use std::collections::BTreeMap;

use crate::cost::{compute_cost, CostError};
use crate::frontier::Frontier;
use crate::model::{AgentGraph, NodeId, RouteResult, Task, WeightVector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RouteError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("no path from {origin} to {destination}")]
    Unreachable {
        origin: NodeId,
        destination: NodeId,
    },
    #[error(transparent)]
    Cost(#[from] CostError),
}

impl RouteError {
    pub fn is_unreachable(&self) -> bool {
        matches!(self, RouteError::Unreachable { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("predecessor chain from {destination} does not reach {origin}")]
pub struct BrokenChain {
    pub origin: NodeId,
    pub destination: NodeId,
}

/// Per-call search bookkeeping, indexed by node id.
#[derive(Debug, Clone, Default)]
pub struct SearchState {
    pub total_cost: BTreeMap<NodeId, f64>,
    pub predecessor: BTreeMap<NodeId, NodeId>,
}

/// Walks `predecessor` back from `destination` and returns the forward path.
pub fn reconstruct_path(
    predecessor: &BTreeMap<NodeId, NodeId>,
    source: NodeId,
    destination: NodeId,
) -> Result<Vec<NodeId>, BrokenChain> {
    let broken = BrokenChain {
        origin: source,
        destination,
    };
    let mut path = vec![destination];
    let mut current = destination;
    while current != source {
        // A chain longer than the map itself must contain a cycle.
        if path.len() > predecessor.len() + 1 {
            return Err(broken);
        }
        current = *predecessor.get(&current).ok_or_else(|| broken.clone())?;
        path.push(current);
    }
    path.reverse();
    Ok(path)
}

/// Minimum-cost route for `task` from its source to its destination.
pub fn route(
    graph: &AgentGraph,
    task: &Task,
    weights: &WeightVector,
) -> Result<RouteResult, RouteError> {
    search(graph, task, weights, false).map(|(result, _)| result)
}

/// Like [`route`], also returning the final search state.
pub fn route_with_state(
    graph: &AgentGraph,
    task: &Task,
    weights: &WeightVector,
) -> Result<(RouteResult, SearchState), RouteError> {
    search(graph, task, weights, false)
}

/// Router with an inverted frontier ordering, for checking that
/// verification detects a broken search.
#[doc(hidden)]
pub fn route_fault_injected(
    graph: &AgentGraph,
    task: &Task,
    weights: &WeightVector,
) -> Result<RouteResult, RouteError> {
    search(graph, task, weights, true).map(|(result, _)| result)
}

fn search(
    graph: &AgentGraph,
    task: &Task,
    weights: &WeightVector,
    fault: bool,
) -> Result<(RouteResult, SearchState), RouteError> {
    let ids: Vec<NodeId> = graph.node_ids().collect();
    let slot_of = |id: NodeId| ids.binary_search(&id).ok();
    let source = slot_of(task.source).ok_or(RouteError::UnknownNode(task.source))?;
    let destination =
        slot_of(task.destination).ok_or(RouteError::UnknownNode(task.destination))?;

    let n = ids.len();
    let mut total = vec![f64::INFINITY; n];
    let mut predecessor: Vec<Option<usize>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut frontier = Frontier::with_slots(n);
    if fault {
        frontier = frontier.inverted();
    }

    total[source] = 0.0;
    frontier.insert(source, 0.0);
    let mut nodes_expanded = 0;
    let mut edges_relaxed = 0;

    while let Some((u, _)) = frontier.pop() {
        settled[u] = true;
        nodes_expanded += 1;
        if u == destination {
            break;
        }
        let from = graph.node(ids[u]).expect("slot maps to a node");
        for link in graph.outgoing(ids[u]) {
            let v = slot_of(link.to).expect("link endpoint exists");
            if settled[v] {
                continue;
            }
            let to = graph.node(link.to).expect("link endpoint exists");
            let cost = compute_cost(task, from, to, link, weights)?.total;
            edges_relaxed += 1;
            let alt = total[u] + cost;
            if alt < total[v] {
                total[v] = alt;
                predecessor[v] = Some(u);
                if frontier.contains(v) {
                    frontier.decrease_key(v, alt);
                } else {
                    frontier.insert(v, alt);
                }
            }
        }
    }

    let state = SearchState {
        total_cost: ids.iter().copied().zip(total.iter().copied()).collect(),
        predecessor: predecessor
            .iter()
            .enumerate()
            .filter_map(|(v, p)| p.map(|p| (ids[v], ids[p])))
            .collect(),
    };

    if !settled[destination] {
        return Err(RouteError::Unreachable {
            origin: task.source,
            destination: task.destination,
        });
    }

    let path = reconstruct_path(&state.predecessor, task.source, task.destination)
        .expect("settled destination has a predecessor chain to the source");
    let mut hop_costs = Vec::with_capacity(path.len().saturating_sub(1));
    for hop in path.windows(2) {
        let link = graph.link(hop[0], hop[1]).expect("path follows links");
        let from = graph.node(hop[0]).expect("path node exists");
        let to = graph.node(hop[1]).expect("path node exists");
        hop_costs.push(compute_cost(task, from, to, link, weights)?.total);
    }
    let total_cost = hop_costs.iter().fold(0.0, |acc, c| acc + c);
    Ok((
        RouteResult {
            path,
            hop_costs,
            total_cost,
            nodes_expanded,
            edges_relaxed,
        },
        state,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AgentNode, Link};

    fn line(n: usize) -> AgentGraph {
        let mut g = AgentGraph::new();
        for i in 0..n {
            g.add_node(AgentNode::new(NodeId(i))).unwrap();
        }
        for i in 1..n {
            g.add_link(Link::new(NodeId(i - 1), NodeId(i), 1.0, 1.0)).unwrap();
        }
        g
    }

    #[test]
    fn source_equals_destination() {
        let g = line(3);
        let r = route(&g, &Task::new(NodeId(1), NodeId(1), 1.0, 1.0), &WeightVector::default()).unwrap();
        assert_eq!(r.path, vec![NodeId(1)]);
        assert!(r.hop_costs.is_empty());
        assert_eq!(r.total_cost, 0.0);
        assert_eq!(r.nodes_expanded, 1);
    }

    #[test]
    fn single_edge() {
        let g = line(2);
        let task = Task::new(NodeId(0), NodeId(1), 2.0, 3.0);
        let w = WeightVector::default();
        let r = route(&g, &task, &w).unwrap();
        let expected = compute_cost(
            &task,
            g.node(NodeId(0)).unwrap(),
            g.node(NodeId(1)).unwrap(),
            g.link(NodeId(0), NodeId(1)).unwrap(),
            &w,
        )
        .unwrap()
        .total;
        assert_eq!(r.path, vec![NodeId(0), NodeId(1)]);
        assert_eq!(r.total_cost, expected);
    }

    #[test]
    fn disconnected_is_unreachable() {
        let g = line(3);
        let err = route(&g, &Task::new(NodeId(2), NodeId(0), 1.0, 1.0), &WeightVector::default()).unwrap_err();
        assert!(err.is_unreachable());
    }

    #[test]
    fn unknown_endpoints() {
        let g = line(2);
        let err = route(&g, &Task::new(NodeId(0), NodeId(9), 1.0, 1.0), &WeightVector::default()).unwrap_err();
        assert_eq!(err, RouteError::UnknownNode(NodeId(9)));
    }

    #[test]
    fn equal_cost_keeps_first_predecessor() {
        // 0 -> 1 -> 3 and 0 -> 2 -> 3 cost the same; node 1 settles first
        // and its relaxation of 3 must not be replaced by node 2's.
        let mut g = AgentGraph::new();
        for i in 0..4 {
            g.add_node(AgentNode::new(NodeId(i))).unwrap();
        }
        for (a, b) in [(0, 1), (0, 2), (1, 3), (2, 3)] {
            g.add_link(Link::new(NodeId(a), NodeId(b), 1.0, 1.0)).unwrap();
        }
        let r = route(&g, &Task::new(NodeId(0), NodeId(3), 1.0, 1.0), &WeightVector::default()).unwrap();
        assert_eq!(r.path, vec![NodeId(0), NodeId(1), NodeId(3)]);
    }

    #[test]
    fn reconstruct_simple_chains() {
        let (s, b, d) = (NodeId(0), NodeId(1), NodeId(2));
        let one: BTreeMap<_, _> = [(d, s)].into_iter().collect();
        assert_eq!(reconstruct_path(&one, s, d).unwrap(), vec![s, d]);
        let two: BTreeMap<_, _> = [(b, s), (d, b)].into_iter().collect();
        assert_eq!(reconstruct_path(&two, s, d).unwrap(), vec![s, b, d]);
    }

    #[test]
    fn reconstruct_long_chain() {
        let ids: Vec<NodeId> = (0..51).map(|i| NodeId((i * 37) % 101)).collect();
        let pred: BTreeMap<_, _> = ids.windows(2).map(|w| (w[1], w[0])).collect();
        let path = reconstruct_path(&pred, ids[0], ids[50]).unwrap();
        assert_eq!(path.len(), 51);
        assert_eq!(path, ids);
    }

    #[test]
    fn reconstruct_detects_broken_chains() {
        let (s, b, d) = (NodeId(0), NodeId(1), NodeId(2));
        let missing: BTreeMap<_, _> = [(d, b)].into_iter().collect();
        assert!(reconstruct_path(&missing, s, d).is_err());
        let cycle: BTreeMap<_, _> = [(d, b), (b, d)].into_iter().collect();
        assert!(reconstruct_path(&cycle, s, d).is_err());
    }

    #[test]
    fn state_exposes_predecessors() {
        let g = line(4);
        let (r, state) = route_with_state(&g, &Task::new(NodeId(0), NodeId(3), 1.0, 1.0), &WeightVector::default()).unwrap();
        assert_eq!(state.total_cost[&NodeId(0)], 0.0);
        assert_eq!(reconstruct_path(&state.predecessor, NodeId(0), NodeId(3)).unwrap(), r.path);
    }
}

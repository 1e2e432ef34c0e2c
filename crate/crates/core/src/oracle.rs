//! Brute-force references for checking the router on small graphs, and a
//! seeded generator of valid random instances.

use rand::Rng;

use crate::cost::{compute_cost, CostError};
use crate::model::{AgentGraph, AgentNode, Link, NodeId, RouteResult, Task, WeightVector, TERM_COUNT};
use crate::rng::{stream_rng, Stream};

/// Largest graph [`exhaustive_best_path`] accepts.
pub const MAX_ORACLE_NODES: usize = 10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("graph has {0} nodes, the oracle accepts at most {MAX_ORACLE_NODES}")]
    TooLarge(usize),
    #[error("invalid instance parameters: {0}")]
    InvalidParams(String),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error(transparent)]
    Cost(#[from] CostError),
}

/// Cost of one link evaluated from scratch: metrics are looked up here
/// rather than shared with the router's relaxation code.
fn edge_cost(
    graph: &AgentGraph,
    task: &Task,
    weights: &WeightVector,
    from: NodeId,
    to: NodeId,
) -> Result<f64, OracleError> {
    let tail = graph.node(from).ok_or(OracleError::UnknownNode(from))?;
    let head = graph.node(to).ok_or(OracleError::UnknownNode(to))?;
    let link = Link {
        from,
        to,
        ..graph.link(from, to).cloned().ok_or(OracleError::UnknownNode(to))?
    };
    Ok(compute_cost(task, tail, head, &link, weights)?.total)
}

struct Search<'a> {
    graph: &'a AgentGraph,
    task: &'a Task,
    weights: &'a WeightVector,
    best: Option<(f64, Vec<NodeId>, Vec<f64>)>,
    visited: Vec<NodeId>,
}

impl Search<'_> {
    fn dfs(&mut self, path: &mut Vec<NodeId>, costs: &mut Vec<f64>) -> Result<(), OracleError> {
        let here = *path.last().expect("path starts at source");
        if here == self.task.destination {
            let total = costs.iter().fold(0.0, |a, c| a + c);
            let better = match &self.best {
                None => true,
                Some((b, bp, _)) => total < *b || (total == *b && path.as_slice() < bp.as_slice()),
            };
            if better {
                self.best = Some((total, path.clone(), costs.clone()));
            }
            return Ok(());
        }
        let next: Vec<NodeId> = self.graph.outgoing(here).iter().map(|l| l.to).collect();
        for to in next {
            if self.visited.contains(&to) {
                continue;
            }
            let c = edge_cost(self.graph, self.task, self.weights, here, to)?;
            path.push(to);
            costs.push(c);
            self.visited.push(to);
            self.dfs(path, costs)?;
            self.visited.pop();
            costs.pop();
            path.pop();
        }
        Ok(())
    }
}

/// Minimum-cost simple path by exhaustive enumeration, ties broken by the
/// lexicographically smallest id sequence. `Ok(None)` means unreachable.
///
/// `nodes_expanded` and `edges_relaxed` of the result are zero.
pub fn exhaustive_best_path(
    graph: &AgentGraph,
    task: &Task,
    weights: &WeightVector,
) -> Result<Option<RouteResult>, OracleError> {
    if graph.node_count() > MAX_ORACLE_NODES {
        return Err(OracleError::TooLarge(graph.node_count()));
    }
    for id in [task.source, task.destination] {
        if !graph.contains(id) {
            return Err(OracleError::UnknownNode(id));
        }
    }
    let mut search = Search {
        graph,
        task,
        weights,
        best: None,
        visited: vec![task.source],
    };
    search.dfs(&mut vec![task.source], &mut Vec::new())?;
    Ok(search.best.map(|(total_cost, path, hop_costs)| RouteResult {
        path,
        hop_costs,
        total_cost,
        nodes_expanded: 0,
        edges_relaxed: 0,
    }))
}

/// Uniform sampling ranges for [`random_instance`]. Every lower bound must
/// be positive except for load and latency, which may start at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRanges {
    pub capability: (f64, f64),
    pub availability: (f64, f64),
    pub load_factor: (f64, f64),
    pub model_sophistication: (f64, f64),
    pub reliability: (f64, f64),
    pub bandwidth: (f64, f64),
    pub latency: (f64, f64),
    pub complexity: (f64, f64),
    pub priority: (f64, f64),
    pub weight: (f64, f64),
}

impl Default for MetricRanges {
    fn default() -> Self {
        Self {
            capability: (0.5, 10.0),
            availability: (0.05, 1.0),
            load_factor: (0.0, 2.0),
            model_sophistication: (0.5, 5.0),
            reliability: (0.5, 1.0),
            bandwidth: (0.5, 20.0),
            latency: (0.0, 10.0),
            complexity: (0.5, 10.0),
            priority: (0.5, 10.0),
            weight: (0.01, 3.0),
        }
    }
}

impl MetricRanges {
    fn validate(&self) -> Result<(), OracleError> {
        let positive = [
            ("capability", self.capability),
            ("availability", self.availability),
            ("model_sophistication", self.model_sophistication),
            ("reliability", self.reliability),
            ("bandwidth", self.bandwidth),
            ("complexity", self.complexity),
            ("priority", self.priority),
            ("weight", self.weight),
        ];
        for (name, (lo, hi)) in positive {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(OracleError::InvalidParams(format!("{name} range ({lo}, {hi})")));
            }
        }
        for (name, (lo, hi)) in [("load_factor", self.load_factor), ("latency", self.latency)] {
            if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
                return Err(OracleError::InvalidParams(format!("{name} range ({lo}, {hi})")));
            }
        }
        for (name, (_, hi)) in [("availability", self.availability), ("reliability", self.reliability)] {
            if hi > 1.0 {
                return Err(OracleError::InvalidParams(format!("{name} must not exceed 1")));
            }
        }
        Ok(())
    }
}

fn draw(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// A seeded random graph with `nodes` agents where each ordered pair is
/// linked with probability `density`, plus a task between two distinct
/// agents and a random weight vector.
pub fn random_instance(
    nodes: usize,
    density: f64,
    ranges: &MetricRanges,
    seed: u64,
) -> Result<(AgentGraph, Task, WeightVector), OracleError> {
    if nodes < 2 {
        return Err(OracleError::InvalidParams(format!("node count {nodes} < 2")));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(OracleError::InvalidParams(format!("density {density} outside (0, 1]")));
    }
    ranges.validate()?;
    let mut rng = stream_rng(seed, Stream::Instance);
    let mut graph = AgentGraph::new();
    for i in 0..nodes {
        graph
            .add_node(AgentNode {
                id: NodeId(i),
                capability: draw(&mut rng, ranges.capability),
                availability: draw(&mut rng, ranges.availability),
                load_factor: draw(&mut rng, ranges.load_factor),
                model_sophistication: draw(&mut rng, ranges.model_sophistication),
                reliability: draw(&mut rng, ranges.reliability),
            })
            .expect("fresh id");
    }
    for i in 0..nodes {
        for j in 0..nodes {
            if i == j {
                continue;
            }
            // density 1 must link every pair
            if density >= 1.0 || rng.random::<f64>() < density {
                let link = Link::new(
                    NodeId(i),
                    NodeId(j),
                    draw(&mut rng, ranges.bandwidth),
                    draw(&mut rng, ranges.latency),
                );
                graph.add_link(link).expect("fresh pair");
            }
        }
    }
    let s = rng.random_range(0..nodes);
    let mut d = rng.random_range(0..nodes - 1);
    if d >= s {
        d += 1;
    }
    let mut task = Task::new(
        NodeId(s),
        NodeId(d),
        draw(&mut rng, ranges.complexity),
        draw(&mut rng, ranges.priority),
    );
    task.id = seed;
    let weights = WeightVector(std::array::from_fn::<_, TERM_COUNT, _>(|_| draw(&mut rng, ranges.weight)));
    Ok((graph, task, weights))
}

//! Domain types for the agent network: agents, links, the directed graph that
//! holds them, routing tasks, cost weights and route results.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Dense identifier of an agent, assigned at load time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An agent: a vertex of the routing graph carrying its performance metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentNode {
    pub id: NodeId,
    /// Processing capability, abstract units. Must be positive.
    pub capability: f64,
    /// Readiness fraction in (0, 1].
    pub availability: f64,
    /// Current utilization, non-negative.
    pub load_factor: f64,
    /// Abstract model quality score. Must be positive.
    pub model_sophistication: f64,
    /// Historical success fraction in (0, 1].
    pub reliability: f64,
}

impl AgentNode {
    /// A node with neutral metrics (all ones, zero load).
    pub fn new(id: NodeId) -> Self {
        Self {
            id,
            capability: 1.0,
            availability: 1.0,
            load_factor: 0.0,
            model_sophistication: 1.0,
            reliability: 1.0,
        }
    }
}

/// A directed link between two agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub from: NodeId,
    pub to: NodeId,
    /// Positive capacity, abstract units.
    pub bandwidth: f64,
    /// Non-negative delay in milliseconds (ticks inside the simulator).
    pub latency: f64,
}

impl Link {
    pub fn new(from: NodeId, to: NodeId, bandwidth: f64, latency: f64) -> Self {
        Self {
            from,
            to,
            bandwidth,
            latency,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("node {0} already exists")]
    DuplicateNode(NodeId),
    #[error("link {0} -> {1} references a missing node")]
    MissingEndpoint(NodeId, NodeId),
    #[error("link {0} -> {1} already exists")]
    DuplicateLink(NodeId, NodeId),
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
}

/// Directed agent graph. Nodes are kept in id order and each adjacency list
/// is kept sorted by destination id, so every traversal is deterministic.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentGraph {
    nodes: BTreeMap<NodeId, AgentNode>,
    adjacency: BTreeMap<NodeId, Vec<Link>>,
}

impl AgentGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, node: AgentNode) -> Result<(), GraphError> {
        if self.nodes.contains_key(&node.id) {
            return Err(GraphError::DuplicateNode(node.id));
        }
        self.adjacency.entry(node.id).or_default();
        self.nodes.insert(node.id, node);
        Ok(())
    }

    /// Adds a directed link. Endpoints must exist, the ordered pair must be
    /// new, and self-loops are rejected.
    pub fn add_link(&mut self, link: Link) -> Result<(), GraphError> {
        if link.from == link.to {
            return Err(GraphError::SelfLoop(link.from));
        }
        if !self.nodes.contains_key(&link.from) || !self.nodes.contains_key(&link.to) {
            return Err(GraphError::MissingEndpoint(link.from, link.to));
        }
        let out = self.adjacency.entry(link.from).or_default();
        match out.binary_search_by_key(&link.to, |l| l.to) {
            Ok(_) => Err(GraphError::DuplicateLink(link.from, link.to)),
            Err(pos) => {
                out.insert(pos, link);
                Ok(())
            }
        }
    }

    /// Adds `a -> b` and `b -> a` with the same metrics.
    pub fn add_symmetric_link(
        &mut self,
        a: NodeId,
        b: NodeId,
        bandwidth: f64,
        latency: f64,
    ) -> Result<(), GraphError> {
        self.add_link(Link::new(a, b, bandwidth, latency))?;
        self.add_link(Link::new(b, a, bandwidth, latency))
    }

    pub fn node(&self, id: NodeId) -> Option<&AgentNode> {
        self.nodes.get(&id)
    }

    pub fn node_mut(&mut self, id: NodeId) -> Option<&mut AgentNode> {
        self.nodes.get_mut(&id)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &AgentNode> {
        self.nodes.values()
    }

    pub fn nodes_mut(&mut self) -> impl Iterator<Item = &mut AgentNode> {
        self.nodes.values_mut()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.adjacency.values().map(Vec::len).sum()
    }

    /// Outgoing links of `id`, sorted by destination.
    pub fn outgoing(&self, id: NodeId) -> &[Link] {
        self.adjacency.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn link(&self, from: NodeId, to: NodeId) -> Option<&Link> {
        let out = self.adjacency.get(&from)?;
        out.binary_search_by_key(&to, |l| l.to).ok().map(|i| &out[i])
    }

    /// All links in (from, to) order.
    pub fn links(&self) -> impl Iterator<Item = &Link> {
        self.adjacency.values().flatten()
    }

    /// Subgraph induced by `keep`: the kept nodes plus every link whose both
    /// endpoints are kept.
    pub fn induced<F>(&self, mut keep: F) -> AgentGraph
    where
        F: FnMut(NodeId) -> bool,
    {
        let mut out = AgentGraph::new();
        for node in self.nodes.values() {
            if keep(node.id) {
                out.nodes.insert(node.id, node.clone());
                out.adjacency.insert(node.id, Vec::new());
            }
        }
        for (from, links) in &self.adjacency {
            if let Some(dst) = out.adjacency.get_mut(from) {
                dst.extend(
                    links
                        .iter()
                        .filter(|l| out.nodes.contains_key(&l.to))
                        .cloned(),
                );
            }
        }
        out
    }

    /// Keeps only the links for which `keep` returns true.
    pub fn retain_links<F>(&mut self, mut keep: F)
    where
        F: FnMut(&Link) -> bool,
    {
        for links in self.adjacency.values_mut() {
            links.retain(&mut keep);
        }
    }
}

/// A routing request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: u64,
    /// Task complexity, positive.
    pub complexity: f64,
    /// Request priority, positive; used unnormalized.
    pub priority: f64,
    pub source: NodeId,
    pub destination: NodeId,
    /// Simulation tick at which the task was submitted.
    pub submit_time: u64,
}

impl Task {
    pub fn new(source: NodeId, destination: NodeId, complexity: f64, priority: f64) -> Self {
        Self {
            id: 0,
            complexity,
            priority,
            source,
            destination,
            submit_time: 0,
        }
    }
}

/// Number of cost terms and therefore of tunable weights.
pub const TERM_COUNT: usize = 7;

/// Coefficients `w1..w7` of the edge cost, stored zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(pub [f64; TERM_COUNT]);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WeightError {
    #[error("weight w{index} = {value} must be finite and non-negative")]
    Negative { index: usize, value: f64 },
    #[error("at least one weight must be positive")]
    AllZero,
}

impl WeightVector {
    pub const fn uniform(value: f64) -> Self {
        Self([value; TERM_COUNT])
    }

    /// Weight `w{index}` with a one-based index, as in the cost formula.
    pub fn get(&self, index: usize) -> f64 {
        self.0[index - 1]
    }

    pub fn set(&mut self, index: usize, value: f64) {
        self.0[index - 1] = value;
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.map(|w| w * factor))
    }

    pub fn validate(&self) -> Result<(), WeightError> {
        for (i, &w) in self.0.iter().enumerate() {
            if !(w.is_finite() && w >= 0.0) {
                return Err(WeightError::Negative {
                    index: i + 1,
                    value: w,
                });
            }
        }
        if self.0.iter().all(|&w| w == 0.0) {
            return Err(WeightError::AllZero);
        }
        Ok(())
    }
}

impl Default for WeightVector {
    fn default() -> Self {
        Self::uniform(1.0)
    }
}

/// Outcome of a successful route query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteResult {
    /// Source first, destination last.
    pub path: Vec<NodeId>,
    /// Cost of each traversed link, in path order.
    pub hop_costs: Vec<f64>,
    pub total_cost: f64,
    /// Nodes settled (first extraction from the frontier).
    pub nodes_expanded: usize,
    /// Link cost evaluations performed during the search.
    pub edges_relaxed: usize,
}

impl RouteResult {
    /// Left-to-right sum of `hop_costs`.
    pub fn summed_cost(&self) -> f64 {
        self.hop_costs.iter().fold(0.0, |acc, c| acc + c)
    }
}

/// One broken invariant found by [`validate_graph`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Node { id: NodeId, message: String },
    Link { from: NodeId, to: NodeId, message: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Node { id, message } => write!(f, "node {id}: {message}"),
            Violation::Link { from, to, message } => write!(f, "link {from} -> {to}: {message}"),
        }
    }
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

fn unit_fraction(v: f64) -> bool {
    v.is_finite() && v > 0.0 && v <= 1.0
}

/// Checks every node and link invariant. Returns an empty list iff the
/// graph is valid.
pub fn validate_graph(graph: &AgentGraph) -> Vec<Violation> {
    let mut out = Vec::new();
    for node in graph.nodes.values() {
        let mut bad = |message: String| {
            out.push(Violation::Node {
                id: node.id,
                message,
            })
        };
        if !positive(node.capability) {
            bad(format!("capability {} must be > 0", node.capability));
        }
        if !unit_fraction(node.availability) {
            bad(format!("availability {} must be in (0, 1]", node.availability));
        }
        if !(node.load_factor.is_finite() && node.load_factor >= 0.0) {
            bad(format!("load_factor {} must be >= 0", node.load_factor));
        }
        if !positive(node.model_sophistication) {
            bad(format!(
                "model_sophistication {} must be > 0",
                node.model_sophistication
            ));
        }
        if !unit_fraction(node.reliability) {
            bad(format!("reliability {} must be in (0, 1]", node.reliability));
        }
    }
    for (&owner, links) in &graph.adjacency {
        if !graph.nodes.contains_key(&owner) {
            out.push(Violation::Node {
                id: owner,
                message: "adjacency entry without a node".into(),
            });
        }
        for (i, link) in links.iter().enumerate() {
            let mut bad = |message: String| {
                out.push(Violation::Link {
                    from: link.from,
                    to: link.to,
                    message,
                })
            };
            if link.from != owner {
                bad(format!("stored under node {owner}"));
            }
            if link.from == link.to {
                bad("self-loop".into());
            }
            if !graph.nodes.contains_key(&link.to) || !graph.nodes.contains_key(&link.from) {
                bad("endpoint does not exist".into());
            }
            if links[..i].iter().any(|l| l.to == link.to) {
                bad("duplicate link for ordered pair".into());
            }
            if !positive(link.bandwidth) {
                bad(format!("bandwidth {} must be > 0", link.bandwidth));
            }
            if !(link.latency.is_finite() && link.latency >= 0.0) {
                bad(format!("latency {} must be >= 0", link.latency));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_nodes() -> AgentGraph {
        let mut g = AgentGraph::new();
        g.add_node(AgentNode::new(NodeId(0))).unwrap();
        g.add_node(AgentNode::new(NodeId(1))).unwrap();
        g
    }

    #[test]
    fn empty_graph_is_valid() {
        assert!(validate_graph(&AgentGraph::new()).is_empty());
    }

    #[test]
    fn zero_availability_is_one_violation() {
        let mut g = two_nodes();
        g.node_mut(NodeId(1)).unwrap().availability = 0.0;
        let v = validate_graph(&g);
        assert_eq!(v.len(), 1);
        assert!(matches!(&v[0], Violation::Node { id, message } if *id == NodeId(1) && message.contains("availability")));
    }

    #[test]
    fn every_metric_is_checked() {
        let mut g = two_nodes();
        {
            let n = g.node_mut(NodeId(0)).unwrap();
            n.capability = 0.0;
            n.load_factor = -1.0;
            n.model_sophistication = -2.0;
            n.reliability = 1.5;
        }
        g.add_link(Link::new(NodeId(0), NodeId(1), 0.0, -1.0)).unwrap();
        assert_eq!(validate_graph(&g).len(), 6);
    }

    #[test]
    fn add_link_rejects_bad_structure() {
        let mut g = two_nodes();
        assert_eq!(
            g.add_link(Link::new(NodeId(0), NodeId(0), 1.0, 1.0)),
            Err(GraphError::SelfLoop(NodeId(0)))
        );
        assert_eq!(
            g.add_link(Link::new(NodeId(0), NodeId(7), 1.0, 1.0)),
            Err(GraphError::MissingEndpoint(NodeId(0), NodeId(7)))
        );
        g.add_link(Link::new(NodeId(0), NodeId(1), 1.0, 1.0)).unwrap();
        assert_eq!(
            g.add_link(Link::new(NodeId(0), NodeId(1), 2.0, 1.0)),
            Err(GraphError::DuplicateLink(NodeId(0), NodeId(1)))
        );
        assert_eq!(
            g.add_node(AgentNode::new(NodeId(1))),
            Err(GraphError::DuplicateNode(NodeId(1)))
        );
    }

    #[test]
    fn validation_is_idempotent() {
        let mut g = two_nodes();
        g.node_mut(NodeId(0)).unwrap().reliability = 0.0;
        let before = g.clone();
        assert_eq!(validate_graph(&g), validate_graph(&g));
        assert_eq!(g, before);
    }

    #[test]
    fn induced_keeps_only_internal_links() {
        let mut g = two_nodes();
        g.add_node(AgentNode::new(NodeId(2))).unwrap();
        g.add_symmetric_link(NodeId(0), NodeId(1), 1.0, 1.0).unwrap();
        g.add_symmetric_link(NodeId(1), NodeId(2), 1.0, 1.0).unwrap();
        let sub = g.induced(|id| id != NodeId(2));
        assert_eq!(sub.node_count(), 2);
        assert_eq!(sub.link_count(), 2);
        assert!(sub.link(NodeId(1), NodeId(2)).is_none());
    }

    #[test]
    fn weight_validation() {
        assert!(WeightVector::uniform(1.0).validate().is_ok());
        assert_eq!(WeightVector::uniform(0.0).validate(), Err(WeightError::AllZero));
        let mut w = WeightVector::uniform(1.0);
        w.set(3, -0.5);
        assert!(matches!(w.validate(), Err(WeightError::Negative { index: 3, .. })));
    }
}

//! Two routes to the same agent: a short hop through a busy, flaky relay
//! and a long hop through an idle, dependable one. Every priority term
//! scales with P, so above some priority the short route wins.

use apbda::model::{AgentGraph, AgentNode, Link, NodeId, Task, WeightVector};
use apbda::router::route;

fn main() {
    let mut g = AgentGraph::new();
    for i in 0..4 {
        g.add_node(AgentNode::new(NodeId(i))).unwrap();
    }
    let busy = g.node_mut(NodeId(1)).unwrap();
    busy.availability = 0.5;
    busy.load_factor = 2.0;
    busy.reliability = 0.25;
    g.add_link(Link::new(NodeId(0), NodeId(1), 10.0, 0.5)).unwrap();
    g.add_link(Link::new(NodeId(1), NodeId(3), 10.0, 0.5)).unwrap();
    g.add_link(Link::new(NodeId(0), NodeId(2), 10.0, 3.0)).unwrap();
    g.add_link(Link::new(NodeId(2), NodeId(3), 10.0, 3.0)).unwrap();

    let weights = WeightVector::default();
    for p in [0.25, 0.5, 1.0, 1.5, 2.0, 5.0] {
        let r = route(&g, &Task::new(NodeId(0), NodeId(3), 1.0, p), &weights).unwrap();
        let via = if r.path.contains(&NodeId(1)) { "short (busy)" } else { "long (idle)" };
        println!("priority {p:>4}: {via:<13} cost {:.3}", r.total_cost);
    }
}

//! Builds a small agent graph by hand and routes one task across it.

use apbda::model::{AgentGraph, AgentNode, NodeId, Task, WeightVector};
use apbda::router::route;

fn agent(id: usize, capability: f64, reliability: f64) -> AgentNode {
    AgentNode {
        capability,
        reliability,
        ..AgentNode::new(NodeId(id))
    }
}

fn main() {
    let mut g = AgentGraph::new();
    g.add_node(agent(0, 1.0, 1.0)).unwrap();
    g.add_node(agent(1, 4.0, 0.99)).unwrap();
    g.add_node(agent(2, 1.0, 0.7)).unwrap();
    g.add_node(agent(3, 2.0, 0.98)).unwrap();

    g.add_symmetric_link(NodeId(0), NodeId(1), 10.0, 2.0).unwrap();
    g.add_symmetric_link(NodeId(0), NodeId(2), 10.0, 1.0).unwrap();
    g.add_symmetric_link(NodeId(1), NodeId(3), 10.0, 2.0).unwrap();
    g.add_symmetric_link(NodeId(2), NodeId(3), 10.0, 1.0).unwrap();

    let task = Task::new(NodeId(0), NodeId(3), 6.0, 2.0);
    let r = route(&g, &task, &WeightVector::default()).expect("connected");
    let path: Vec<String> = r.path.iter().map(ToString::to_string).collect();
    println!("path       {}", path.join(" -> "));
    println!("hop costs  {:?}", r.hop_costs);
    println!("total      {}", r.total_cost);
    println!("expanded   {} nodes, {} relaxations", r.nodes_expanded, r.edges_relaxed);
}

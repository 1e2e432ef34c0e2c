//! Prunes unreliable agents and slow links before routing.

use apbda::filter::{apply_filter, FilterPolicy};
use apbda::model::{AgentGraph, AgentNode, Link, NodeId, Task, WeightVector};
use apbda::router::route;

fn main() {
    let mut g = AgentGraph::new();
    for i in 0..4 {
        g.add_node(AgentNode::new(NodeId(i))).unwrap();
    }
    g.node_mut(NodeId(1)).unwrap().reliability = 0.8;
    g.add_link(Link::new(NodeId(0), NodeId(1), 10.0, 1.0)).unwrap();
    g.add_link(Link::new(NodeId(1), NodeId(3), 10.0, 1.0)).unwrap();
    g.add_link(Link::new(NodeId(0), NodeId(2), 10.0, 1.5)).unwrap();
    g.add_link(Link::new(NodeId(2), NodeId(3), 10.0, 1.5)).unwrap();
    g.add_link(Link::new(NodeId(0), NodeId(3), 10.0, 9.0)).unwrap();

    let task = Task::new(NodeId(0), NodeId(3), 2.0, 1.0);
    let weights = WeightVector::default();
    let policy = FilterPolicy {
        max_latency: Some(5.0),
        min_reliability: Some(0.9),
        ..FilterPolicy::default()
    };
    let filtered = apply_filter(&g, &policy, &task);
    println!("links {} -> {}", g.link_count(), filtered.link_count());

    let plain = route(&g, &task, &weights).unwrap();
    let pruned = route(&filtered, &task, &weights).unwrap();
    println!("unfiltered {:?} cost {:.3}", plain.path, plain.total_cost);
    println!("filtered   {:?} cost {:.3}", pruned.path, pruned.total_cost);
}

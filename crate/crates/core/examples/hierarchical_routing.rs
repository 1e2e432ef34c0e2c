//! Four dense teams joined by sparse bridges, routed flat and through
//! clusters.

use apbda::hierarchy::{build_clustering, build_supergraph, route_hierarchical};
use apbda::model::{AgentGraph, AgentNode, NodeId, Task, WeightVector};
use apbda::router::route;

fn main() {
    let mut g = AgentGraph::new();
    for i in 0..20 {
        g.add_node(AgentNode::new(NodeId(i))).unwrap();
    }
    for team in 0..4 {
        for a in 0..5 {
            for b in a + 1..5 {
                g.add_symmetric_link(NodeId(team * 5 + a), NodeId(team * 5 + b), 10.0, 1.0).unwrap();
            }
        }
        let next = (team + 1) % 4;
        g.add_symmetric_link(NodeId(team * 5), NodeId(next * 5 + 1), 5.0, 4.0).unwrap();
    }

    let clustering = build_clustering(&g, 4, 0).unwrap();
    for c in &clustering.clusters {
        println!("cluster {} head {} members {:?}", c.id, c.head, c.members);
    }
    let sg = build_supergraph(&g, &clustering);
    println!("super-graph: {} nodes, {} links", sg.graph.node_count(), sg.graph.link_count());

    let task = Task::new(NodeId(2), NodeId(13), 3.0, 2.0);
    let w = WeightVector::default();
    let flat = route(&g, &task, &w).unwrap();
    let hier = route_hierarchical(&g, &clustering, &task, &w).unwrap();
    println!("flat         {:?} cost {:.3} expanded {}", flat.path, flat.total_cost, flat.nodes_expanded);
    println!("hierarchical {:?} cost {:.3} expanded {}", hier.path, hier.total_cost, hier.nodes_expanded);
    println!("ratio {:.4}", hier.total_cost / flat.total_cost);
}

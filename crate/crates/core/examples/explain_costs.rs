//! Attributes a single edge cost to its seven terms.

use apbda::cost::compute_cost;
use apbda::model::{AgentNode, Link, NodeId, Task, WeightVector};

fn main() {
    let from = AgentNode::new(NodeId(0));
    let to = AgentNode {
        capability: 2.0,
        availability: 0.5,
        load_factor: 1.0,
        model_sophistication: 2.0,
        reliability: 0.5,
        ..AgentNode::new(NodeId(1))
    };
    let link = Link::new(NodeId(0), NodeId(1), 4.0, 3.0);
    let task = Task::new(NodeId(0), NodeId(1), 4.0, 2.0);

    for weights in [WeightVector::default(), WeightVector([1.0, 1.0, 1.0, 0.1, 1.0, 1.0, 3.0])] {
        let b = compute_cost(&task, &from, &to, &link, &weights).unwrap();
        println!("weights {:?}", weights.0);
        for t in &b.terms {
            println!("  {:<22} raw {:>6.3}  weighted {:>6.3}", t.name, t.raw, t.weighted);
        }
        println!("  total {}\n", b.total);
    }
}

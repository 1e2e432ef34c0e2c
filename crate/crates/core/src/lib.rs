//! Priority- and context-aware shortest-path routing for networks of agents.
//!
//! Every link `i -> j` is scored per task by a weighted sum of seven terms
//! (see [`cost::compute_cost`]), and [`router::route`] runs Dijkstra's
//! algorithm over those scores. Around the router sit an optional
//! threshold [`filter`], two-level [`hierarchy`] routing, a tabular
//! Q-learning weight adapter ([`rl`]) and a seeded tick [`sim`]ulator.
//! [`oracle`] provides an exhaustive reference search used by [`verify`].
//!
//! ```
//! use apbda::model::{AgentGraph, AgentNode, Link, NodeId, Task, WeightVector};
//! use apbda::router::route;
//!
//! let mut g = AgentGraph::new();
//! for i in 0..3 {
//!     g.add_node(AgentNode::new(NodeId(i))).unwrap();
//! }
//! g.add_link(Link::new(NodeId(0), NodeId(1), 1.0, 1.0)).unwrap();
//! g.add_link(Link::new(NodeId(1), NodeId(2), 1.0, 1.0)).unwrap();
//! g.add_link(Link::new(NodeId(0), NodeId(2), 1.0, 9.0)).unwrap();
//!
//! let task = Task::new(NodeId(0), NodeId(2), 1.0, 1.0);
//! let r = route(&g, &task, &WeightVector::default()).unwrap();
//! assert_eq!(r.path, vec![NodeId(0), NodeId(1), NodeId(2)]);
//! ```

pub mod cli;
pub mod cost;
pub mod filter;
pub mod frontier;
pub mod hierarchy;
pub mod model;
pub mod oracle;
pub mod rl;
pub mod rng;
pub mod router;
pub mod scenario;
pub mod sim;
pub mod verify;

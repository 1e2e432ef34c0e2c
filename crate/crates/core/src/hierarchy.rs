//! Two-level routing over clusters of agents.
//!
//! Agents are partitioned by seeded k-medoids on shortest-path latency; each
//! medoid becomes its cluster's head. The super-graph has one vertex per
//! cluster carrying the head's metrics, and one link per ordered cluster pair
//! with at least one crossing link: minimum latency and maximum bandwidth
//! over the crossing links. A route picks its cluster sequence on the
//! super-graph, then expands each leg with a full search inside the cluster.
//! Reported costs always come from the real links.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;

use crate::cost::compute_cost;
use crate::model::{AgentGraph, AgentNode, Link, NodeId, RouteResult, Task, WeightVector};
use crate::rng::{stream_rng, Stream};
use crate::router::{route, RouteError};

const MAX_ITERATIONS: usize = 100;

/// Seeded k-medoids attempts per clustering.
pub const RESTARTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub id: usize,
    /// Sorted member ids.
    pub members: Vec<NodeId>,
    pub head: NodeId,
}

/// A partition of the agents into clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    pub clusters: Vec<Cluster>,
    pub membership: BTreeMap<NodeId, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HierarchyError {
    #[error("cluster count {k} must be between 1 and {nodes}")]
    InvalidK { k: usize, nodes: usize },
    #[error("invalid clustering: {0}")]
    InvalidClustering(String),
}

impl Clustering {
    /// Builds a clustering from `(head, members)` groups. Cluster ids are
    /// assigned in order of each cluster's smallest member.
    pub fn from_groups(groups: Vec<(NodeId, Vec<NodeId>)>) -> Self {
        let mut groups: Vec<(NodeId, Vec<NodeId>)> = groups
            .into_iter()
            .map(|(head, mut members)| {
                members.sort();
                (head, members)
            })
            .collect();
        groups.sort_by_key(|(_, m)| m.first().copied());
        let mut membership = BTreeMap::new();
        let clusters = groups
            .into_iter()
            .enumerate()
            .map(|(id, (head, members))| {
                for &m in &members {
                    membership.insert(m, id);
                }
                Cluster { id, members, head }
            })
            .collect();
        Self {
            clusters,
            membership,
        }
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn cluster_of(&self, id: NodeId) -> Option<usize> {
        self.membership.get(&id).copied()
    }

    /// Checks that the clusters partition the graph's nodes and that every
    /// head belongs to its own cluster.
    pub fn validate(&self, graph: &AgentGraph) -> Result<(), HierarchyError> {
        let bad = |m: String| Err(HierarchyError::InvalidClustering(m));
        let mut seen = BTreeMap::new();
        for (index, c) in self.clusters.iter().enumerate() {
            if c.id != index {
                return bad(format!("cluster at position {index} has id {}", c.id));
            }
            if c.members.is_empty() {
                return bad(format!("cluster {index} is empty"));
            }
            if !c.members.contains(&c.head) {
                return bad(format!("head {} is not a member of cluster {index}", c.head));
            }
            for &m in &c.members {
                if seen.insert(m, index).is_some() {
                    return bad(format!("node {m} is in more than one cluster"));
                }
                if self.membership.get(&m) != Some(&index) {
                    return bad(format!("membership of node {m} disagrees with cluster {index}"));
                }
            }
        }
        if seen.len() != self.membership.len() {
            return bad("membership lists nodes outside every cluster".into());
        }
        for id in graph.node_ids() {
            if !seen.contains_key(&id) {
                return bad(format!("node {id} is not covered"));
            }
        }
        if seen.len() != graph.node_count() {
            return bad("clusters reference nodes missing from the graph".into());
        }
        Ok(())
    }
}

/// Symmetric dissimilarity between agents used for clustering.
///
/// The shorter of the two directed shortest-latency distances; pairs with no
/// directed path either way fall back to undirected hop count scaled by
/// `max_latency + 1`, and fully disconnected pairs get `n` such hops.
pub fn clustering_distances(graph: &AgentGraph) -> Vec<Vec<f64>> {
    let ids: Vec<NodeId> = graph.node_ids().collect();
    let n = ids.len();
    let slot = |id: NodeId| ids.binary_search(&id).expect("node in graph");

    let mut lat = vec![vec![f64::INFINITY; n]; n];
    let mut hops = vec![vec![usize::MAX; n]; n];
    let mut undirected: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut max_latency: f64 = 0.0;
    for (i, row) in lat.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for l in graph.links() {
        let (a, b) = (slot(l.from), slot(l.to));
        lat[a][b] = lat[a][b].min(l.latency);
        undirected[a].push(b);
        undirected[b].push(a);
        max_latency = max_latency.max(l.latency);
    }
    for k in 0..n {
        for i in 0..n {
            if lat[i][k].is_infinite() {
                continue;
            }
            for j in 0..n {
                let via = lat[i][k] + lat[k][j];
                if via < lat[i][j] {
                    lat[i][j] = via;
                }
            }
        }
    }
    for (start, row) in hops.iter_mut().enumerate() {
        row[start] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &undirected[u] {
                if row[v] == usize::MAX {
                    row[v] = row[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    let scale = max_latency + 1.0;
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let d = lat[i][j].min(lat[j][i]);
                    if d.is_finite() {
                        d
                    } else if hops[i][j] != usize::MAX {
                        hops[i][j] as f64 * scale
                    } else {
                        n as f64 * scale
                    }
                })
                .collect()
        })
        .collect()
}

/// Partitions the agents into `k` clusters by seeded k-medoids.
///
/// Medoids are seeded k-medoids++ style (each next medoid drawn with
/// probability proportional to its squared distance from the chosen ones),
/// refined by alternating assignment and medoid update, and the cheapest of
/// [`RESTARTS`] seeded attempts is kept.
pub fn build_clustering(
    graph: &AgentGraph,
    k: usize,
    seed: u64,
) -> Result<Clustering, HierarchyError> {
    let n = graph.node_count();
    if k == 0 || k > n {
        return Err(HierarchyError::InvalidK { k, nodes: n });
    }
    let ids: Vec<NodeId> = graph.node_ids().collect();
    let dist = clustering_distances(graph);
    let mut rng = stream_rng(seed, Stream::Clustering);

    let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
    for _ in 0..RESTARTS {
        let (medoids, assignment) = refine(&dist, seed_medoids(&dist, k, &mut rng));
        let cost = (0..n).fold(0.0, |acc, v| acc + dist[v][medoids[assignment[v]]]);
        if best.as_ref().is_none_or(|(c, _, _)| cost < *c) {
            best = Some((cost, medoids, assignment));
        }
    }
    let (_, medoids, assignment) = best.expect("at least one restart");

    let groups = medoids
        .iter()
        .enumerate()
        .map(|(c, &m)| {
            let members = (0..n).filter(|&v| assignment[v] == c).map(|v| ids[v]).collect();
            (ids[m], members)
        })
        .collect();
    Ok(Clustering::from_groups(groups))
}

fn seed_medoids(dist: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let n = dist.len();
    let mut medoids = vec![rng.random_range(0..n)];
    while medoids.len() < k {
        let weights: Vec<f64> = (0..n)
            .map(|v| {
                let d = medoids.iter().map(|&m| dist[v][m]).fold(f64::INFINITY, f64::min);
                d * d
            })
            .collect();
        let total = weights.iter().fold(0.0, |a, w| a + w);
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut chosen = None;
            for (v, w) in weights.iter().enumerate() {
                if *w > 0.0 {
                    chosen = Some(v);
                    if r < *w {
                        break;
                    }
                    r -= w;
                }
            }
            chosen.expect("positive total")
        } else {
            // every remaining agent coincides with a medoid
            (0..n).find(|v| !medoids.contains(v)).expect("k <= n")
        };
        medoids.push(pick);
    }
    medoids.sort_unstable();
    medoids
}

fn assign(dist: &[Vec<f64>], medoids: &[usize]) -> Vec<usize> {
    (0..dist.len())
        .map(|v| {
            if let Some(c) = medoids.iter().position(|&m| m == v) {
                return c;
            }
            // medoids are sorted, so the first minimum has the lowest id
            let mut best = 0;
            for c in 1..medoids.len() {
                if dist[v][medoids[c]] < dist[v][medoids[best]] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

fn refine(dist: &[Vec<f64>], mut medoids: Vec<usize>) -> (Vec<usize>, Vec<usize>) {
    let n = dist.len();
    let mut assignment = assign(dist, &medoids);
    for _ in 0..MAX_ITERATIONS {
        let mut next = Vec::with_capacity(medoids.len());
        for (c, &current) in medoids.iter().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&v| assignment[v] == c).collect();
            let spread = |m: usize| members.iter().fold(0.0, |acc, &v| acc + dist[m][v]);
            let mut best = current;
            let mut best_spread = spread(current);
            for &m in &members {
                let s = spread(m);
                if s < best_spread {
                    best = m;
                    best_spread = s;
                }
            }
            next.push(best);
        }
        next.sort_unstable();
        if next == medoids {
            break;
        }
        medoids = next;
        assignment = assign(dist, &medoids);
    }
    (medoids, assignment)
}

/// Cluster-level view of the graph. Vertex `NodeId(c)` stands for cluster `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperGraph {
    pub graph: AgentGraph,
    /// Number of crossing links summarized by each super-link.
    pub crossing_counts: BTreeMap<(usize, usize), usize>,
}

/// Aggregates `graph` over `clustering`.
///
/// Only nodes present in `graph` count, so a filtered graph can be
/// aggregated with a clustering of the unfiltered one. A cluster whose head
/// is absent is represented by its lowest present member; a cluster with no
/// present members is left out.
pub fn build_supergraph(graph: &AgentGraph, clustering: &Clustering) -> SuperGraph {
    let mut sg = AgentGraph::new();
    for c in &clustering.clusters {
        let rep = if graph.contains(c.head) {
            Some(c.head)
        } else {
            c.members.iter().copied().find(|&m| graph.contains(m))
        };
        if let Some(rep) = rep {
            let head = graph.node(rep).expect("present");
            sg.add_node(AgentNode {
                id: NodeId(c.id),
                ..head.clone()
            })
            .expect("cluster ids are unique");
        }
    }
    let mut aggregated: BTreeMap<(usize, usize), (f64, f64, usize)> = BTreeMap::new();
    for l in graph.links() {
        let (Some(x), Some(y)) = (clustering.cluster_of(l.from), clustering.cluster_of(l.to)) else {
            continue;
        };
        if x == y {
            continue;
        }
        let entry = aggregated
            .entry((x, y))
            .or_insert((f64::INFINITY, f64::NEG_INFINITY, 0));
        entry.0 = entry.0.min(l.latency);
        entry.1 = entry.1.max(l.bandwidth);
        entry.2 += 1;
    }
    let mut crossing_counts = BTreeMap::new();
    for ((x, y), (latency, bandwidth, count)) in aggregated {
        sg.add_link(Link::new(NodeId(x), NodeId(y), bandwidth, latency))
            .expect("one link per cluster pair between present clusters");
        crossing_counts.insert((x, y), count);
    }
    SuperGraph {
        graph: sg,
        crossing_counts,
    }
}

fn hop_costs(
    graph: &AgentGraph,
    task: &Task,
    weights: &WeightVector,
    path: &[NodeId],
) -> Result<Vec<f64>, RouteError> {
    path.windows(2)
        .map(|hop| {
            let link = graph.link(hop[0], hop[1]).expect("expanded path follows links");
            let from = graph.node(hop[0]).expect("path node exists");
            let to = graph.node(hop[1]).expect("path node exists");
            Ok(compute_cost(task, from, to, link, weights)?.total)
        })
        .collect()
}

fn leg_task(task: &Task, source: NodeId, destination: NodeId) -> Task {
    Task {
        source,
        destination,
        ..task.clone()
    }
}

/// Routes `task` through the cluster hierarchy. The returned path is a real
/// path in `graph`; `nodes_expanded` and `edges_relaxed` add up the
/// super-level search and every intra-cluster search performed.
pub fn route_hierarchical(
    graph: &AgentGraph,
    clustering: &Clustering,
    task: &Task,
    weights: &WeightVector,
) -> Result<RouteResult, RouteError> {
    for id in [task.source, task.destination] {
        if !graph.contains(id) {
            return Err(RouteError::UnknownNode(id));
        }
    }
    let unreachable = || RouteError::Unreachable {
        origin: task.source,
        destination: task.destination,
    };
    let src_cluster = clustering
        .cluster_of(task.source)
        .ok_or(RouteError::UnknownNode(task.source))?;
    let dst_cluster = clustering
        .cluster_of(task.destination)
        .ok_or(RouteError::UnknownNode(task.destination))?;

    let cluster_graph = |c: usize| graph.induced(|id| clustering.cluster_of(id) == Some(c));

    if src_cluster == dst_cluster {
        return route(&cluster_graph(src_cluster), task, weights);
    }

    let sg = build_supergraph(graph, clustering);
    let super_task = leg_task(task, NodeId(src_cluster), NodeId(dst_cluster));
    let sequence = route(&sg.graph, &super_task, weights).map_err(|e| match e {
        RouteError::Unreachable { .. } => unreachable(),
        other => other,
    })?;

    let mut nodes_expanded = sequence.nodes_expanded;
    let mut edges_relaxed = sequence.edges_relaxed;
    let mut path = vec![task.source];
    let mut current = task.source;

    for pair in sequence.path.windows(2) {
        let (x, y) = (pair[0].0, pair[1].0);
        let inside = cluster_graph(x);
        let mut crossings = Vec::new();
        for &u in &clustering.clusters[x].members {
            let Some(from) = graph.node(u) else { continue };
            for l in graph.outgoing(u) {
                if clustering.cluster_of(l.to) == Some(y) {
                    let to = graph.node(l.to).expect("link endpoint exists");
                    let cost = compute_cost(task, from, to, l, weights)?.total;
                    crossings.push((cost, u, l.to));
                }
            }
        }
        crossings.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .expect("finite costs")
                .then((a.1, a.2).cmp(&(b.1, b.2)))
        });
        let mut taken = None;
        for &(_, u, v) in &crossings {
            match route(&inside, &leg_task(task, current, u), weights) {
                Ok(leg) => {
                    nodes_expanded += leg.nodes_expanded;
                    edges_relaxed += leg.edges_relaxed;
                    taken = Some((leg, v));
                    break;
                }
                Err(RouteError::Unreachable { .. }) => continue,
                Err(other) => return Err(other),
            }
        }
        let (leg, v) = taken.ok_or_else(unreachable)?;
        path.extend_from_slice(&leg.path[1..]);
        path.push(v);
        current = v;
    }

    let last = route(
        &cluster_graph(dst_cluster),
        &leg_task(task, current, task.destination),
        weights,
    )
    .map_err(|e| match e {
        RouteError::Unreachable { .. } => unreachable(),
        other => other,
    })?;
    nodes_expanded += last.nodes_expanded;
    edges_relaxed += last.edges_relaxed;
    path.extend_from_slice(&last.path[1..]);

    let hop_costs = hop_costs(graph, task, weights, &path)?;
    let total_cost = hop_costs.iter().fold(0.0, |acc, c| acc + c);
    Ok(RouteResult {
        path,
        hop_costs,
        total_cost,
        nodes_expanded,
        edges_relaxed,
    })
}

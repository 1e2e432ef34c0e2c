//! Deterministic tick-based simulation of task routing over an agent network.
//!
//! Each tick the simulator, in order:
//!
//! 1. completes hops ending this tick (a per-hop Bernoulli failure trial with
//!    probability `1 - R_j` runs on arrival at each agent);
//! 2. dispatches tasks submitted this tick through the router stack
//!    (filter, then hierarchical or flat routing);
//! 3. decays agent load toward its base value and derives availability as
//!    `max(EPS_DIV, 1 - min(1, load))`;
//! 4. folds the current metrics into the filter's moving averages.
//!
//! A hop `i -> j` takes `ceil(L_ij) + ceil(T / C_j)` ticks, and adds
//! `load_quantum` to agent `j` when it starts. Whenever `window` tasks have
//! completed, their outcomes are scored and, when learning is enabled, the
//! weights are adjusted before the next dispatch.

mod report;
mod workload;

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use report::{percentile, read_records, RatioStats, Record, ReportHeader, RunReport, Stats, Summary, WindowRecord};
pub use workload::{generate_workload, Phase, WorkloadError, WorkloadParams};

use crate::cost::EPS_DIV;
use crate::filter::{apply_filter_with_history, FilterPolicy, MetricHistory, PolicyError};
use crate::hierarchy::{build_clustering, route_hierarchical, Clustering, HierarchyError};
use crate::model::{validate_graph, AgentGraph, NodeId, RouteResult, Task, Violation, WeightVector, WeightError};
use crate::rl::{compute_reward, AgentSnapshot, RlAdapter, RlConfig, RlError};
use crate::rng::{stream_rng, Stream};
use crate::router::{route, RouteError};

/// What happened to one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskOutcome {
    pub task_id: u64,
    pub priority: f64,
    pub complexity: f64,
    /// Agents visited, from the source to the last agent reached.
    pub path: Vec<NodeId>,
    /// Sum of link latencies over the traversed hops.
    pub path_latency: f64,
    pub dispatch_tick: u64,
    pub completion_tick: u64,
    pub completion_time: u64,
    pub succeeded: bool,
    /// Agent at which the task failed; unset on success and when no route
    /// existed.
    pub failure_node: Option<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HierarchyConfig {
    pub enabled: bool,
    /// Cluster count; defaults to `ceil(sqrt(n))`.
    pub k: Option<usize>,
    pub seed: u64,
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            k: None,
            seed: 0,
        }
    }
}

impl HierarchyConfig {
    pub fn cluster_count(&self, nodes: usize) -> usize {
        self.k
            .unwrap_or_else(|| (nodes as f64).sqrt().ceil() as usize)
            .max(1)
    }
}

/// Timing, dynamics and seeds of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Ticks during which tasks arrive. The run continues until every
    /// in-flight task has finished.
    pub duration: u64,
    pub seed: u64,
    pub workload_seed: Option<u64>,
    pub failure_seed: Option<u64>,
    pub rl_seed: Option<u64>,
    pub load_quantum: f64,
    pub load_decay: f64,
    pub ewma_decay: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            duration: 1000,
            seed: 0,
            workload_seed: None,
            failure_seed: None,
            rl_seed: None,
            load_quantum: 0.1,
            load_decay: 0.95,
            ewma_decay: crate::filter::DEFAULT_EWMA_DECAY,
        }
    }
}

impl SimConfig {
    pub fn workload_seed(&self) -> u64 {
        self.workload_seed.unwrap_or(self.seed)
    }

    pub fn failure_seed(&self) -> u64 {
        self.failure_seed.unwrap_or(self.seed)
    }

    pub fn rl_seed(&self) -> u64 {
        self.rl_seed.unwrap_or(self.seed)
    }
}

/// A complete simulation input.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub graph: AgentGraph,
    /// Symbol table: `names[id]` is the scenario name of node `id`.
    pub names: Vec<String>,
    pub weights: WeightVector,
    pub workload: WorkloadParams,
    pub filter: FilterPolicy,
    pub hierarchy: Option<HierarchyConfig>,
    pub rl: RlConfig,
    pub sim: SimConfig,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("graph: {0}")]
    Graph(Violation),
    #[error("weights: {0}")]
    Weights(#[from] WeightError),
    #[error("filter: {0}")]
    Filter(#[from] PolicyError),
    #[error("hierarchy: {0}")]
    Hierarchy(#[from] HierarchyError),
    #[error("rl: {0}")]
    Rl(#[from] RlError),
    #[error("workload: {0}")]
    Workload(#[from] WorkloadError),
    #[error("sim: {0}")]
    Sim(String),
}

impl Scenario {
    /// Scenario over `graph` with every optional block at its default.
    pub fn with_graph(graph: AgentGraph) -> Self {
        let names = graph.node_ids().map(|id| format!("n{id}")).collect();
        Self {
            graph,
            names,
            weights: WeightVector::default(),
            workload: WorkloadParams::default(),
            filter: FilterPolicy::default(),
            hierarchy: None,
            rl: RlConfig::default(),
            sim: SimConfig::default(),
        }
    }

    /// Every problem found, in block order.
    pub fn validate(&self) -> Vec<ScenarioError> {
        let mut out: Vec<ScenarioError> = validate_graph(&self.graph)
            .into_iter()
            .map(ScenarioError::Graph)
            .collect();
        if let Err(e) = self.weights.validate() {
            out.push(e.into());
        }
        if let Err(e) = self.filter.validate() {
            out.push(e.into());
        }
        if let Some(h) = self.hierarchy.as_ref().filter(|h| h.enabled) {
            let n = self.graph.node_count();
            let k = h.cluster_count(n);
            if k > n {
                out.push(HierarchyError::InvalidK { k, nodes: n }.into());
            }
        }
        if let Err(e) = self.rl.validate() {
            out.push(e.into());
        }
        if let Err(e) = self.workload.validate() {
            out.push(e.into());
        }
        if self.sim.duration > 0 && self.graph.node_count() < 2 {
            out.push(ScenarioError::Sim("a run needs at least two nodes".into()));
        }
        let s = &self.sim;
        if !(s.load_quantum.is_finite() && s.load_quantum >= 0.0) {
            out.push(ScenarioError::Sim("load_quantum must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&s.load_decay) {
            out.push(ScenarioError::Sim("load_decay must be in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&s.ewma_decay) {
            out.push(ScenarioError::Sim("ewma_decay must be in [0, 1]".into()));
        }
        out
    }

    pub fn hierarchical(&self) -> bool {
        self.hierarchy.as_ref().is_some_and(|h| h.enabled)
    }

    pub fn node_name(&self, id: NodeId) -> String {
        self.names
            .get(id.0)
            .cloned()
            .unwrap_or_else(|| id.to_string())
    }

    /// Resolves a node by scenario name, falling back to a numeric id.
    pub fn resolve(&self, name: &str) -> Option<NodeId> {
        if let Some(i) = self.names.iter().position(|n| n == name) {
            return Some(NodeId(i));
        }
        name.parse::<usize>()
            .ok()
            .map(NodeId)
            .filter(|&id| self.graph.contains(id))
    }

    pub fn generate_workload(&self) -> Result<Vec<Task>, WorkloadError> {
        let ids: Vec<NodeId> = self.graph.node_ids().collect();
        generate_workload(&self.workload, &ids, self.sim.duration, self.sim.workload_seed())
    }
}

/// The filter and routing mode applied to every task.
#[derive(Debug, Clone, Copy)]
pub struct RouterStack<'a> {
    pub filter: &'a FilterPolicy,
    pub clustering: Option<&'a Clustering>,
}

impl RouterStack<'_> {
    pub fn route(
        &self,
        graph: &AgentGraph,
        task: &Task,
        weights: &WeightVector,
        history: Option<&MetricHistory>,
    ) -> Result<RouteResult, RouteError> {
        let filtered;
        let graph = if self.filter.is_active() {
            filtered = apply_filter_with_history(graph, self.filter, task, history);
            &filtered
        } else {
            graph
        };
        match self.clustering {
            Some(c) => route_hierarchical(graph, c, task, weights),
            None => route(graph, task, weights),
        }
    }
}

#[derive(Debug, Clone)]
struct InFlight {
    task: Task,
    route: Vec<NodeId>,
    /// Index into `route` of the agent the current hop leaves from.
    hop: usize,
    hop_end: u64,
    path_latency: f64,
}

/// Mutable simulation state.
#[derive(Debug, Clone)]
pub struct World {
    pub tick: u64,
    pub graph: AgentGraph,
    pub weights: WeightVector,
    pub history: MetricHistory,
    base_load: BTreeMap<NodeId, f64>,
    in_flight: Vec<InFlight>,
}

impl World {
    pub fn new(graph: AgentGraph, weights: WeightVector, ewma_decay: f64) -> Self {
        let base_load = graph.nodes().map(|n| (n.id, n.load_factor)).collect();
        let mut history = MetricHistory::new(ewma_decay);
        history.observe(&graph);
        Self {
            tick: 0,
            graph,
            weights,
            history,
            base_load,
            in_flight: Vec::new(),
        }
    }

    pub fn in_flight(&self) -> usize {
        self.in_flight.len()
    }

    pub fn base_load(&self, id: NodeId) -> f64 {
        self.base_load[&id]
    }

    fn hop_ticks(&self, task: &Task, from: NodeId, to: NodeId) -> u64 {
        let link = self.graph.link(from, to).expect("routed hop follows a link");
        let node = self.graph.node(to).expect("routed hop target exists");
        let transit = link.latency.max(0.0).ceil() as u64;
        let service = (task.complexity / node.capability).ceil() as u64;
        transit + service
    }

    fn start_hop(&mut self, flight: &mut InFlight, quantum: f64) {
        let (from, to) = (flight.route[flight.hop], flight.route[flight.hop + 1]);
        flight.hop_end = self.tick + self.hop_ticks(&flight.task, from, to);
        if let Some(n) = self.graph.node_mut(to) {
            n.load_factor += quantum;
        }
    }
}

/// Parameters of [`step`] that stay fixed for a run.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub router: RouterStack<'a>,
    pub load_quantum: f64,
    pub load_decay: f64,
    /// Receives `(hierarchical, flat)` cost pairs when routing
    /// hierarchically.
    pub compare_flat: bool,
}

/// Advances `world` by one tick, dispatching `arrivals` (tasks submitted at
/// this tick). Returns the outcomes finished during the tick, in emission
/// order, and hierarchical-to-flat cost ratios of the tasks dispatched.
pub fn step(
    world: &mut World,
    arrivals: &[Task],
    ctx: &StepContext<'_>,
    failure_rng: &mut ChaCha8Rng,
) -> (Vec<TaskOutcome>, Vec<f64>) {
    let now = world.tick;
    let mut outcomes = Vec::new();
    let mut ratios = Vec::new();

    let mut flights = std::mem::take(&mut world.in_flight);
    let mut still = Vec::with_capacity(flights.len());
    for mut f in flights.drain(..) {
        if f.hop_end != now {
            still.push(f);
            continue;
        }
        let (from, at) = (f.route[f.hop], f.route[f.hop + 1]);
        f.path_latency += world.graph.link(from, at).expect("hop link").latency;
        f.hop += 1;
        let reliability = world.graph.node(at).expect("hop node").reliability;
        let roll: f64 = failure_rng.random();
        if roll < 1.0 - reliability {
            outcomes.push(finish(&f, now, Some(at)));
        } else if at == f.task.destination {
            outcomes.push(finish(&f, now, None));
        } else {
            world.start_hop(&mut f, ctx.load_quantum);
            still.push(f);
        }
    }

    for task in arrivals {
        let routed = ctx
            .router
            .route(&world.graph, task, &world.weights, Some(&world.history));
        if ctx.compare_flat && ctx.router.clustering.is_some() {
            let flat = RouterStack {
                clustering: None,
                ..ctx.router
            }
            .route(&world.graph, task, &world.weights, Some(&world.history));
            if let (Ok(h), Ok(f)) = (&routed, &flat) {
                if f.total_cost > 0.0 {
                    ratios.push(h.total_cost / f.total_cost);
                }
            }
        }
        let mut flight = InFlight {
            task: task.clone(),
            route: vec![task.source],
            hop: 0,
            hop_end: now,
            path_latency: 0.0,
        };
        match routed {
            Ok(r) if r.path.len() > 1 => {
                flight.route = r.path;
                world.start_hop(&mut flight, ctx.load_quantum);
                still.push(flight);
            }
            Ok(_) => outcomes.push(finish(&flight, now, None)),
            Err(_) => outcomes.push(TaskOutcome {
                succeeded: false,
                ..finish(&flight, now, None)
            }),
        }
    }
    still.sort_by_key(|f| f.task.id);
    world.in_flight = still;

    for node in world.graph.nodes_mut() {
        let base = world.base_load[&node.id];
        let mut load = base + (node.load_factor - base) * ctx.load_decay;
        if (load - base).abs() < 1e-12 {
            load = base;
        }
        node.load_factor = load.max(0.0);
        node.availability = (1.0 - node.load_factor.min(1.0)).max(EPS_DIV);
    }
    world.history.observe(&world.graph);
    world.tick += 1;
    (outcomes, ratios)
}

fn finish(f: &InFlight, now: u64, failure: Option<NodeId>) -> TaskOutcome {
    TaskOutcome {
        task_id: f.task.id,
        priority: f.task.priority,
        complexity: f.task.complexity,
        path: f.route[..=f.hop].to_vec(),
        path_latency: f.path_latency,
        dispatch_tick: f.task.submit_time,
        completion_tick: now,
        completion_time: now - f.task.submit_time,
        succeeded: failure.is_none(),
        failure_node: failure,
    }
}

/// Command-line style overrides applied on top of a scenario.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RunOptions {
    pub no_filter: bool,
    pub hierarchical: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("scenario is invalid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<ScenarioError>),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
}

/// Runs `scenario` to completion.
pub fn run(scenario: &Scenario) -> Result<RunReport, RunError> {
    run_with(scenario, RunOptions::default())
}

pub fn run_with(scenario: &Scenario, options: RunOptions) -> Result<RunReport, RunError> {
    let mut scenario = scenario.clone();
    if options.no_filter {
        scenario.filter.enabled = false;
    }
    if options.hierarchical {
        scenario.hierarchy.get_or_insert_with(HierarchyConfig::default).enabled = true;
    }
    let problems = scenario.validate();
    if !problems.is_empty() {
        return Err(RunError::Invalid(problems));
    }
    let tasks = scenario.generate_workload()?;
    let clustering = match scenario.hierarchy.as_ref().filter(|h| h.enabled) {
        Some(h) => Some(build_clustering(
            &scenario.graph,
            h.cluster_count(scenario.graph.node_count()),
            h.seed,
        )?),
        None => None,
    };
    let header = ReportHeader::new(&scenario, options);
    let ctx = StepContext {
        router: RouterStack {
            filter: &scenario.filter,
            clustering: clustering.as_ref(),
        },
        load_quantum: scenario.sim.load_quantum,
        load_decay: scenario.sim.load_decay,
        compare_flat: clustering.is_some(),
    };

    let mut world = World::new(scenario.graph.clone(), scenario.weights, scenario.sim.ewma_decay);
    let mut failure_rng = stream_rng(scenario.sim.failure_seed(), Stream::Failure);
    let mut adapter = scenario
        .rl
        .enabled
        .then(|| RlAdapter::new(scenario.rl.clone(), stream_rng(scenario.sim.rl_seed(), Stream::Exploration)));

    let mut report = RunReport::new(header, scenario.weights);
    if scenario.sim.duration == 0 {
        return Ok(report);
    }

    let window = scenario.rl.window;
    let mut pending: Vec<TaskOutcome> = Vec::new();
    let mut load_sums: BTreeMap<NodeId, f64> = BTreeMap::new();
    let mut load_ticks = 0u64;
    let mut next = 0;

    while world.tick < scenario.sim.duration || world.in_flight() > 0 {
        let start = next;
        while next < tasks.len() && tasks[next].submit_time == world.tick {
            next += 1;
        }
        let (outcomes, ratios) = step(&mut world, &tasks[start..next], &ctx, &mut failure_rng);
        report.cost_ratios.extend(ratios);
        for n in world.graph.nodes() {
            *load_sums.entry(n.id).or_insert(0.0) += n.load_factor;
        }
        load_ticks += 1;
        pending.extend(outcomes.iter().cloned());
        report.outcomes.extend(outcomes);

        while pending.len() >= window {
            let closed: Vec<TaskOutcome> = pending.drain(..window).collect();
            let agents: Vec<AgentSnapshot> = load_sums
                .iter()
                .map(|(&id, &sum)| AgentSnapshot {
                    id,
                    load_factor: sum / load_ticks as f64,
                })
                .collect();
            let window_id = report.windows.len();
            let weights_used = world.weights;
            let record = match adapter.as_mut() {
                Some(a) => {
                    let update = a
                        .end_window(&closed, &agents, &world.weights)
                        .expect("window is non-empty");
                    world.weights = update.weights;
                    WindowRecord::learned(update, weights_used)
                }
                None => WindowRecord::frozen(
                    compute_reward(&closed, &agents, &scenario.rl, window_id)
                        .expect("window is non-empty"),
                    weights_used,
                ),
            };
            report.windows.push(WindowRecord {
                task_ids: closed.iter().map(|o| o.task_id).collect(),
                agent_loads: agents,
                closed_after: report.outcomes.len() - pending.len(),
                ..record
            });
            load_sums.clear();
            load_ticks = 0;
        }
    }
    report.final_weights = world.weights;
    report.q_table = adapter.map(|a| a.q_table().clone());
    Ok(report)
}

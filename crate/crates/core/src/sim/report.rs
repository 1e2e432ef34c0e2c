use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{RunOptions, Scenario, TaskOutcome};
use crate::filter::FilterPolicy;
use crate::model::WeightVector;
use crate::rl::{AgentSnapshot, QTable, RLAction, RLState, RewardComponents, RewardRecord, WindowUpdate};

/// Run settings echoed at the top of every summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub nodes: usize,
    pub links: usize,
    pub duration: u64,
    pub workload_seed: u64,
    pub failure_seed: u64,
    pub rl_seed: u64,
    pub initial_weights: WeightVector,
    pub filter: FilterPolicy,
    pub hierarchical: bool,
    pub clusters: Option<usize>,
    pub rl_enabled: bool,
    pub window: usize,
    /// Command-line overrides that changed the routing policy.
    pub overrides: Vec<String>,
}

impl ReportHeader {
    pub fn new(scenario: &Scenario, options: RunOptions) -> Self {
        let mut overrides = Vec::new();
        if options.no_filter {
            overrides.push("--no-filter".to_string());
        }
        if options.hierarchical {
            overrides.push("--hierarchical".to_string());
        }
        let n = scenario.graph.node_count();
        Self {
            nodes: n,
            links: scenario.graph.link_count(),
            duration: scenario.sim.duration,
            workload_seed: scenario.sim.workload_seed(),
            failure_seed: scenario.sim.failure_seed(),
            rl_seed: scenario.sim.rl_seed(),
            initial_weights: scenario.weights,
            filter: scenario.filter.clone(),
            hierarchical: scenario.hierarchical(),
            clusters: scenario
                .hierarchy
                .as_ref()
                .filter(|h| h.enabled)
                .map(|h| h.cluster_count(n)),
            rl_enabled: scenario.rl.enabled,
            window: scenario.rl.window,
            overrides,
        }
    }
}

/// One closed window: its reward and, when learning, the adapter's step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub window_id: usize,
    pub reward: f64,
    pub components: RewardComponents,
    /// Weights in force while the window's tasks were routed.
    pub weights: WeightVector,
    pub state: Option<RLState>,
    pub state_index: Option<usize>,
    pub epsilon: Option<f64>,
    pub action: Option<RLAction>,
    pub task_ids: Vec<u64>,
    /// Mean load of each agent over the ticks of the window.
    pub agent_loads: Vec<AgentSnapshot>,
    /// Number of outcomes emitted before this window closed.
    pub closed_after: usize,
}

impl WindowRecord {
    pub(crate) fn frozen(record: RewardRecord, weights: WeightVector) -> Self {
        Self {
            window_id: record.window_id,
            reward: record.reward,
            components: record.components,
            weights,
            state: None,
            state_index: None,
            epsilon: None,
            action: None,
            task_ids: Vec::new(),
            agent_loads: Vec::new(),
            closed_after: 0,
        }
    }

    pub(crate) fn learned(update: WindowUpdate, weights: WeightVector) -> Self {
        Self {
            state: Some(update.state),
            state_index: Some(update.state_index),
            epsilon: Some(update.epsilon),
            action: Some(update.action),
            ..Self::frozen(update.record, weights)
        }
    }
}

/// Everything a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub header: ReportHeader,
    pub outcomes: Vec<TaskOutcome>,
    pub windows: Vec<WindowRecord>,
    pub final_weights: WeightVector,
    /// Hierarchical / flat route cost per dispatched task, when routing
    /// hierarchically.
    pub cost_ratios: Vec<f64>,
    pub q_table: Option<QTable>,
}

/// One line of the records file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Record {
    TaskOutcome(TaskOutcome),
    Reward(WindowRecord),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioStats {
    pub count: usize,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub tasks: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub unreachable: usize,
    pub success_rate: f64,
    pub mean_completion_time: Option<f64>,
    pub p50_completion_time: Option<f64>,
    pub p90_completion_time: Option<f64>,
    pub p99_completion_time: Option<f64>,
    pub high_priority_tasks: usize,
    pub high_priority_mean_completion_time: Option<f64>,
    pub windows: usize,
    pub mean_reward: Option<f64>,
    pub final_weights: WeightVector,
    pub cost_ratio: Option<RatioStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub header: ReportHeader,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stats: Option<Stats>,
}

/// Nearest-rank percentile of sorted data, `q` in `(0, 100]`.
pub fn percentile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = ((q / 100.0) * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().fold(0.0, |a, v| a + v) / values.len() as f64)
}

impl RunReport {
    pub(crate) fn new(header: ReportHeader, weights: WeightVector) -> Self {
        Self {
            header,
            outcomes: Vec::new(),
            windows: Vec::new(),
            final_weights: weights,
            cost_ratios: Vec::new(),
            q_table: None,
        }
    }

    /// Mean window reward over the last `fraction` of windows (at least one).
    pub fn tail_mean_reward(&self, fraction: f64) -> Option<f64> {
        let n = self.windows.len();
        if n == 0 {
            return None;
        }
        let take = ((n as f64 * fraction).ceil() as usize).clamp(1, n);
        let tail: Vec<f64> = self.windows[n - take..].iter().map(|w| w.reward).collect();
        mean(&tail)
    }

    pub fn summary(&self, high_priority_threshold: f64) -> Summary {
        if self.outcomes.is_empty() {
            return Summary {
                header: self.header.clone(),
                stats: None,
            };
        }
        let succeeded: Vec<&TaskOutcome> = self.outcomes.iter().filter(|o| o.succeeded).collect();
        let mut times: Vec<f64> = succeeded.iter().map(|o| o.completion_time as f64).collect();
        times.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let high: Vec<f64> = succeeded
            .iter()
            .filter(|o| o.priority >= high_priority_threshold)
            .map(|o| o.completion_time as f64)
            .collect();
        let rewards: Vec<f64> = self.windows.iter().map(|w| w.reward).collect();
        let cost_ratio = (!self.cost_ratios.is_empty()).then(|| RatioStats {
            count: self.cost_ratios.len(),
            min: self.cost_ratios.iter().copied().fold(f64::INFINITY, f64::min),
            mean: mean(&self.cost_ratios).expect("non-empty"),
            max: self.cost_ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        });
        let tasks = self.outcomes.len();
        Summary {
            header: self.header.clone(),
            stats: Some(Stats {
                tasks,
                succeeded: succeeded.len(),
                failed: tasks - succeeded.len(),
                unreachable: self
                    .outcomes
                    .iter()
                    .filter(|o| !o.succeeded && o.failure_node.is_none())
                    .count(),
                success_rate: succeeded.len() as f64 / tasks as f64,
                mean_completion_time: mean(&times),
                p50_completion_time: percentile(&times, 50.0),
                p90_completion_time: percentile(&times, 90.0),
                p99_completion_time: percentile(&times, 99.0),
                high_priority_tasks: self
                    .outcomes
                    .iter()
                    .filter(|o| o.priority >= high_priority_threshold)
                    .count(),
                high_priority_mean_completion_time: mean(&high),
                windows: self.windows.len(),
                mean_reward: mean(&rewards),
                final_weights: self.final_weights,
                cost_ratio,
            }),
        }
    }

    /// Writes one JSON record per outcome and per window, each window right
    /// after the outcome that closed it.
    pub fn write_records<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut windows = self.windows.iter().peekable();
        for (i, o) in self.outcomes.iter().enumerate() {
            serde_json::to_writer(&mut out, &Record::TaskOutcome(o.clone()))?;
            out.write_all(b"\n")?;
            while let Some(w) = windows.next_if(|w| w.closed_after == i + 1) {
                serde_json::to_writer(&mut out, &Record::Reward(w.clone()))?;
                out.write_all(b"\n")?;
            }
        }
        Ok(())
    }
}

/// Parses a records file back into its lines.
pub fn read_records<R: BufRead>(input: R) -> io::Result<Vec<Record>> {
    input
        .lines()
        .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|line| {
            let line = line?;
            serde_json::from_str(&line).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
        })
        .collect()
}

//! Tabular Q-learning over the cost weights.
//!
//! Once per window of completed tasks the adapter summarizes the window into
//! an [`RLState`], scores it with a [`RewardRecord`], updates the Q-table for
//! the previous action, and perturbs one weight. Each of the four state
//! fields is bucketed into three levels, giving 81 discrete states; an action
//! scales one of the seven weights up or down, giving 14 actions.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{NodeId, WeightVector, TERM_COUNT};
use crate::sim::TaskOutcome;

pub const ACTION_COUNT: usize = 2 * TERM_COUNT;
pub const LEVELS: usize = 3;
pub const STATE_COUNT: usize = LEVELS * LEVELS * LEVELS * LEVELS;

/// Bucket boundaries for each state field: a value below `[0]` is level 0,
/// below `[1]` level 1, otherwise level 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StateThresholds {
    /// Mean per-hop latency, ticks.
    pub latency: [f64; 2],
    /// Mean agent load factor.
    pub load: [f64; 2],
    /// Failed tasks as a fraction of the window.
    pub incidents: [f64; 2],
    /// Fraction of high-priority tasks.
    pub priority: [f64; 2],
}

impl Default for StateThresholds {
    fn default() -> Self {
        Self {
            latency: [2.0, 5.0],
            load: [0.25, 0.75],
            incidents: [0.02, 0.1],
            priority: [1.0 / 3.0, 2.0 / 3.0],
        }
    }
}

/// Adapter configuration, the `rl` block of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RlConfig {
    pub enabled: bool,
    /// Learning rate.
    pub eta: f64,
    /// Discount factor.
    pub gamma_d: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Windows over which epsilon decays linearly from start to end.
    pub anneal_windows: usize,
    /// Multiplicative perturbation size.
    pub step: f64,
    /// Completed tasks per window.
    pub window: usize,
    /// Weight of the high-priority completion term.
    pub alpha: f64,
    /// Weight of the load fairness term.
    pub beta: f64,
    /// Weight of the reliability term.
    pub gamma: f64,
    pub high_priority_threshold: f64,
    pub w_min: f64,
    pub w_max: f64,
    /// Initial value of every Q-table entry.
    pub q_init: f64,
    pub thresholds: StateThresholds,
}

impl Default for RlConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            eta: 0.1,
            gamma_d: 0.9,
            epsilon_start: 0.3,
            epsilon_end: 0.05,
            anneal_windows: 200,
            step: 0.1,
            window: 100,
            alpha: 0.5,
            beta: 0.3,
            gamma: 0.2,
            high_priority_threshold: 5.0,
            w_min: 0.01,
            w_max: 100.0,
            q_init: 0.0,
            thresholds: StateThresholds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RlError {
    #[error("window contains no completed tasks")]
    EmptyWindow,
    #[error("invalid rl setting {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
}

impl RlConfig {
    pub fn validate(&self) -> Result<(), RlError> {
        let bad = |field, reason: &str| {
            Err(RlError::InvalidConfig {
                field,
                reason: reason.to_string(),
            })
        };
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.eta) {
            return bad("eta", "must be in [0, 1]");
        }
        if !unit(self.gamma_d) {
            return bad("gamma_d", "must be in [0, 1]");
        }
        if !unit(self.epsilon_start) || !unit(self.epsilon_end) {
            return bad("epsilon", "must be in [0, 1]");
        }
        if !(self.step.is_finite() && self.step >= 0.0 && self.step < 1.0) {
            return bad("step", "must be in [0, 1)");
        }
        if self.window == 0 {
            return bad("window", "must be positive");
        }
        for (field, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(field, "must be non-negative");
            }
        }
        if !(self.w_min > 0.0 && self.w_min <= self.w_max && self.w_max.is_finite()) {
            return bad("w_min/w_max", "need 0 < w_min <= w_max < inf");
        }
        if !self.q_init.is_finite() {
            return bad("q_init", "must be finite");
        }
        Ok(())
    }

    /// Exploration rate for the window with zero-based index `window`.
    pub fn epsilon(&self, window: usize) -> f64 {
        let span = self.anneal_windows.saturating_sub(1).max(1) as f64;
        let t = window as f64 / span;
        if t >= 1.0 {
            return self.epsilon_end;
        }
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * t
    }
}

/// Per-agent load observed over a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentSnapshot {
    pub id: NodeId,
    pub load_factor: f64,
}

/// Summary statistics of one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RLState {
    /// Mean latency per traversed hop.
    pub avg_latency: f64,
    pub load_mean: f64,
    /// Population standard deviation of agent load.
    pub load_std: f64,
    pub recent_reliability_incidents: usize,
    /// Fraction of tasks at or above the high-priority threshold.
    pub priority_profile: f64,
    pub tasks: usize,
}

/// Summarizes a window of completed tasks and agent snapshots.
pub fn observe_window(
    window: &[TaskOutcome],
    agents: &[AgentSnapshot],
    high_priority_threshold: f64,
) -> Result<RLState, RlError> {
    if window.is_empty() {
        return Err(RlError::EmptyWindow);
    }
    let hops: usize = window.iter().map(|o| o.path.len().saturating_sub(1)).sum();
    let latency = window.iter().fold(0.0, |acc, o| acc + o.path_latency);
    let avg_latency = if hops == 0 { 0.0 } else { latency / hops as f64 };
    let (load_mean, load_std) = mean_std(agents.iter().map(|a| a.load_factor));
    let incidents = window.iter().filter(|o| !o.succeeded).count();
    let high = window
        .iter()
        .filter(|o| o.priority >= high_priority_threshold)
        .count();
    Ok(RLState {
        avg_latency,
        load_mean,
        load_std,
        recent_reliability_incidents: incidents,
        priority_profile: high as f64 / window.len() as f64,
        tasks: window.len(),
    })
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().fold(0.0, |a, v| a + v) / n as f64;
    let var = values.fold(0.0, |a, v| a + (v - mean) * (v - mean)) / n as f64;
    (mean, var.sqrt())
}

/// Maps a state onto one of the [`STATE_COUNT`] table rows.
pub fn discretize(state: &RLState, thresholds: &StateThresholds) -> usize {
    let level = |v: f64, t: [f64; 2]| {
        if v < t[0] {
            0
        } else if v < t[1] {
            1
        } else {
            2
        }
    };
    let incident_rate = if state.tasks == 0 {
        0.0
    } else {
        state.recent_reliability_incidents as f64 / state.tasks as f64
    };
    let levels = [
        level(state.avg_latency, thresholds.latency),
        level(state.load_mean, thresholds.load),
        level(incident_rate, thresholds.incidents),
        level(state.priority_profile, thresholds.priority),
    ];
    levels.iter().fold(0, |acc, l| acc * LEVELS + l)
}

/// Normalized Gini coefficient in [0, 1]; zero for fewer than two values or
/// an all-zero vector.
pub fn normalized_gini(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let sum = values.iter().fold(0.0, |a, v| a + v);
    if sum <= 0.0 {
        return 0.0;
    }
    let mut diff = 0.0;
    for a in values {
        for b in values {
            diff += (a - b).abs();
        }
    }
    // diff / (2 n^2 mean) rescaled by n / (n - 1)
    let g = diff / (2.0 * n as f64 * sum) * n as f64 / (n - 1) as f64;
    g.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardComponents {
    pub hp_completion: f64,
    pub fairness: f64,
    pub reliability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardRecord {
    pub window_id: usize,
    pub reward: f64,
    pub components: RewardComponents,
}

/// Reward of a window: `alpha·hp + beta·fairness + gamma·reliability` where
/// `hp = 1 / (1 + mean completion time of successful high-priority tasks)`
/// (1 when the window has no high-priority task, 0 when all of them failed),
/// `fairness = 1 - normalized Gini of agent load` and `reliability` is the
/// fraction of successful tasks.
pub fn compute_reward(
    window: &[TaskOutcome],
    agents: &[AgentSnapshot],
    config: &RlConfig,
    window_id: usize,
) -> Result<RewardRecord, RlError> {
    if window.is_empty() {
        return Err(RlError::EmptyWindow);
    }
    let high: Vec<&TaskOutcome> = window
        .iter()
        .filter(|o| o.priority >= config.high_priority_threshold)
        .collect();
    let hp_completion = if high.is_empty() {
        1.0
    } else {
        let done: Vec<f64> = high
            .iter()
            .filter(|o| o.succeeded)
            .map(|o| o.completion_time as f64)
            .collect();
        if done.is_empty() {
            0.0
        } else {
            let mean = done.iter().fold(0.0, |a, v| a + v) / done.len() as f64;
            1.0 / (1.0 + mean)
        }
    };
    let loads: Vec<f64> = agents.iter().map(|a| a.load_factor).collect();
    let fairness = 1.0 - normalized_gini(&loads);
    let reliability = window.iter().filter(|o| o.succeeded).count() as f64 / window.len() as f64;
    let reward = config.alpha * hp_completion + config.beta * fairness + config.gamma * reliability;
    Ok(RewardRecord {
        window_id,
        reward,
        components: RewardComponents {
            hp_completion,
            fairness,
            reliability,
        },
    })
}

/// Scale weight `index` (one-based) by `1 + direction·step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RLAction {
    pub index: usize,
    pub direction: i8,
    pub step: f64,
}

impl RLAction {
    /// Action number `0..ACTION_COUNT`: even numbers increase, odd numbers
    /// decrease, weight index `1 + number / 2`.
    pub fn from_id(id: usize, step: f64) -> Self {
        assert!(id < ACTION_COUNT);
        Self {
            index: id / 2 + 1,
            direction: if id % 2 == 0 { 1 } else { -1 },
            step,
        }
    }

    pub fn id(&self) -> usize {
        (self.index - 1) * 2 + usize::from(self.direction < 0)
    }
}

/// Row-per-state table of action values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub values: Vec<[f64; ACTION_COUNT]>,
}

impl QTable {
    pub fn new(init: f64) -> Self {
        Self {
            values: vec![[init; ACTION_COUNT]; STATE_COUNT],
        }
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[state][action]
    }

    pub fn set(&mut self, state: usize, action: usize, value: f64) {
        self.values[state][action] = value;
    }

    /// Highest-valued action of `state`, lowest id on ties.
    pub fn best_action(&self, state: usize) -> usize {
        let row = &self.values[state];
        let mut best = 0;
        for a in 1..ACTION_COUNT {
            if row[a] > row[best] {
                best = a;
            }
        }
        best
    }

    pub fn max_value(&self, state: usize) -> f64 {
        self.values[state][self.best_action(state)]
    }
}

/// Epsilon-greedy choice: with probability `epsilon` a uniform action,
/// otherwise the greedy one.
pub fn select_action(
    state: usize,
    q: &QTable,
    epsilon: f64,
    step: f64,
    rng: &mut ChaCha8Rng,
) -> RLAction {
    let explore = rng.random::<f64>() < epsilon;
    let id = if explore {
        rng.random_range(0..ACTION_COUNT)
    } else {
        q.best_action(state)
    };
    RLAction::from_id(id, step)
}

/// One tabular Q-learning step on `(state, action) -> (reward, next_state)`.
pub fn update(
    q: &mut QTable,
    state: usize,
    action: usize,
    reward: f64,
    next_state: usize,
    eta: f64,
    gamma_d: f64,
) {
    let old = q.get(state, action);
    let target = reward + gamma_d * q.max_value(next_state);
    q.set(state, action, old + eta * (target - old));
}

/// Applies `action` and clamps the touched weight into `[w_min, w_max]`.
pub fn apply_action(weights: &WeightVector, action: &RLAction, bounds: (f64, f64)) -> WeightVector {
    let mut out = *weights;
    let i = action.index;
    let scaled = out.get(i) * (1.0 + f64::from(action.direction) * action.step);
    out.set(i, scaled.clamp(bounds.0, bounds.1));
    out
}

/// Everything the adapter did at the end of one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowUpdate {
    pub state: RLState,
    pub state_index: usize,
    pub record: RewardRecord,
    pub epsilon: f64,
    pub action: RLAction,
    pub weights: WeightVector,
}

/// The learning loop state, owned by the simulator.
#[derive(Debug, Clone)]
pub struct RlAdapter {
    config: RlConfig,
    q: QTable,
    rng: ChaCha8Rng,
    previous: Option<(usize, usize)>,
    windows: usize,
}

impl RlAdapter {
    pub fn new(config: RlConfig, rng: ChaCha8Rng) -> Self {
        let q = QTable::new(config.q_init);
        Self {
            config,
            q,
            rng,
            previous: None,
            windows: 0,
        }
    }

    pub fn q_table(&self) -> &QTable {
        &self.q
    }

    pub fn config(&self) -> &RlConfig {
        &self.config
    }

    /// Closes a window: credits the previous action with this window's
    /// reward, then picks and applies the next action.
    pub fn end_window(
        &mut self,
        window: &[TaskOutcome],
        agents: &[AgentSnapshot],
        weights: &WeightVector,
    ) -> Result<WindowUpdate, RlError> {
        let cfg = &self.config;
        let state = observe_window(window, agents, cfg.high_priority_threshold)?;
        let record = compute_reward(window, agents, cfg, self.windows)?;
        let s = discretize(&state, &cfg.thresholds);
        if let Some((ps, pa)) = self.previous {
            update(&mut self.q, ps, pa, record.reward, s, cfg.eta, cfg.gamma_d);
        }
        let epsilon = cfg.epsilon(self.windows);
        let action = select_action(s, &self.q, epsilon, cfg.step, &mut self.rng);
        let weights = apply_action(weights, &action, (cfg.w_min, cfg.w_max));
        self.previous = Some((s, action.id()));
        self.windows += 1;
        Ok(WindowUpdate {
            state,
            state_index: s,
            record,
            epsilon,
            action,
            weights,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    fn outcome(priority: f64, completion_time: u64, succeeded: bool) -> TaskOutcome {
        TaskOutcome {
            task_id: 0,
            priority,
            complexity: 1.0,
            path: vec![NodeId(0), NodeId(1)],
            path_latency: 2.0,
            dispatch_tick: 0,
            completion_tick: completion_time,
            completion_time,
            succeeded,
            failure_node: (!succeeded).then_some(NodeId(1)),
        }
    }

    fn snap(loads: &[f64]) -> Vec<AgentSnapshot> {
        loads
            .iter()
            .enumerate()
            .map(|(i, &l)| AgentSnapshot {
                id: NodeId(i),
                load_factor: l,
            })
            .collect()
    }

    #[test]
    fn single_sample_statistics() {
        let s = observe_window(&[outcome(1.0, 3, true)], &snap(&[0.5]), 5.0).unwrap();
        assert_eq!((s.load_mean, s.load_std), (0.5, 0.0));
        assert_eq!(s.avg_latency, 2.0);
        assert_eq!(s.priority_profile, 0.0);
    }

    #[test]
    fn all_high_priority() {
        let w = vec![outcome(9.0, 1, true), outcome(5.0, 2, false)];
        let s = observe_window(&w, &snap(&[0.1, 0.2]), 5.0).unwrap();
        assert_eq!(s.priority_profile, 1.0);
        assert_eq!(s.recent_reliability_incidents, 1);
    }

    #[test]
    fn empty_window_is_rejected() {
        assert_eq!(observe_window(&[], &[], 1.0), Err(RlError::EmptyWindow));
        assert_eq!(
            compute_reward(&[], &[], &RlConfig::default(), 0),
            Err(RlError::EmptyWindow)
        );
    }

    #[test]
    fn perfect_window_rewards_sum_of_coefficients() {
        let cfg = RlConfig::default();
        let w = vec![outcome(9.0, 0, true), outcome(1.0, 0, true)];
        let r = compute_reward(&w, &snap(&[0.3, 0.3, 0.3]), &cfg, 0).unwrap();
        assert_eq!(
            r.components,
            RewardComponents {
                hp_completion: 1.0,
                fairness: 1.0,
                reliability: 1.0
            }
        );
        assert_eq!(r.reward, cfg.alpha + cfg.beta + cfg.gamma);
    }

    #[test]
    fn no_high_priority_defaults_to_one() {
        let cfg = RlConfig::default();
        let w = vec![outcome(1.0, 40, true)];
        let r = compute_reward(&w, &snap(&[0.0, 1.0]), &cfg, 0).unwrap();
        assert_eq!(r.components.hp_completion, 1.0);
        assert_eq!(r.components.fairness, 0.0);
    }

    #[test]
    fn hp_term_uses_successful_tasks() {
        let cfg = RlConfig::default();
        let w = vec![outcome(6.0, 3, true), outcome(6.0, 100, false)];
        let r = compute_reward(&w, &snap(&[1.0]), &cfg, 0).unwrap();
        assert_eq!(r.components.hp_completion, 0.25);
        assert_eq!(r.components.reliability, 0.5);
        let all_failed = vec![outcome(6.0, 3, false)];
        let r = compute_reward(&all_failed, &snap(&[1.0]), &cfg, 0).unwrap();
        assert_eq!(r.components.hp_completion, 0.0);
    }

    #[test]
    fn gini_extremes() {
        assert_eq!(normalized_gini(&[]), 0.0);
        assert_eq!(normalized_gini(&[3.0]), 0.0);
        assert_eq!(normalized_gini(&[0.0, 0.0]), 0.0);
        assert_eq!(normalized_gini(&[2.0, 2.0, 2.0]), 0.0);
        assert!((normalized_gini(&[0.0, 0.0, 0.0, 5.0]) - 1.0).abs() < 1e-12);
        // pairs |1-3| twice over n=2: 4 / (2·2·4) · 2 = 0.5
        assert_eq!(normalized_gini(&[1.0, 3.0]), 0.5);
    }

    #[test]
    fn action_ids_round_trip() {
        for id in 0..ACTION_COUNT {
            assert_eq!(RLAction::from_id(id, 0.1).id(), id);
        }
        assert_eq!(RLAction::from_id(0, 0.1).index, 1);
        assert_eq!(RLAction::from_id(0, 0.1).direction, 1);
        assert_eq!(RLAction::from_id(13, 0.1).index, 7);
        assert_eq!(RLAction::from_id(13, 0.1).direction, -1);
    }

    #[test]
    fn greedy_selection() {
        let mut rng = stream_rng(1, Stream::Exploration);
        let q = QTable::new(0.0);
        let a = select_action(5, &q, 0.0, 0.1, &mut rng);
        assert_eq!((a.index, a.direction), (1, 1));
        let mut q = QTable::new(0.0);
        q.set(5, 9, 0.7);
        let a = select_action(5, &q, 0.0, 0.1, &mut rng);
        assert_eq!(a.id(), 9);
    }

    #[test]
    fn q_update_rules() {
        let mut q = QTable::new(0.0);
        q.set(3, 4, 0.25);
        let before = q.clone();
        update(&mut q, 3, 4, 0.8, 7, 0.0, 0.9);
        assert_eq!(q, before);
        let mut q = QTable::new(0.0);
        update(&mut q, 3, 4, 0.8, 7, 1.0, 0.0);
        assert_eq!(q.get(3, 4), 0.8);
        let mut expected = QTable::new(0.0);
        expected.set(3, 4, 0.8);
        assert_eq!(q, expected);
    }

    #[test]
    fn action_application() {
        let w = WeightVector::uniform(1.0);
        let bounds = (0.01, 100.0);
        assert_eq!(apply_action(&w, &RLAction { index: 2, direction: 1, step: 0.0 }, bounds), w);
        let up = apply_action(&w, &RLAction { index: 4, direction: 1, step: 0.1 }, bounds);
        assert_eq!(up.get(4), 1.1);
        assert_eq!(up.get(3), 1.0);
        let capped = apply_action(&w, &RLAction { index: 4, direction: 1, step: 0.5 }, (0.01, 1.2));
        assert_eq!(capped.get(4), 1.2);
        let floored = apply_action(&WeightVector::uniform(0.011), &RLAction { index: 1, direction: -1, step: 0.5 }, bounds);
        assert_eq!(floored.get(1), 0.01);
    }

    #[test]
    fn epsilon_anneals_linearly() {
        let cfg = RlConfig {
            anneal_windows: 11,
            ..RlConfig::default()
        };
        assert_eq!(cfg.epsilon(0), 0.3);
        assert!((cfg.epsilon(5) - 0.175).abs() < 1e-12);
        assert_eq!(cfg.epsilon(10), 0.05);
        assert_eq!(cfg.epsilon(50), 0.05);
    }

    #[test]
    fn discretization_covers_all_rows() {
        let t = StateThresholds::default();
        let mut s = RLState {
            avg_latency: 0.0,
            load_mean: 0.0,
            load_std: 0.0,
            recent_reliability_incidents: 0,
            priority_profile: 0.0,
            tasks: 100,
        };
        assert_eq!(discretize(&s, &t), 0);
        s.avg_latency = 10.0;
        s.load_mean = 1.0;
        s.recent_reliability_incidents = 50;
        s.priority_profile = 1.0;
        assert_eq!(discretize(&s, &t), STATE_COUNT - 1);
    }
}

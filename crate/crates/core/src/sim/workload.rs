use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::model::{NodeId, Task};
use crate::rng::{stream_rng, Stream};

/// One segment of a cyclic arrival schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Phase {
    /// Length of the phase in ticks.
    pub ticks: u64,
    /// Mean arrivals per tick (Poisson).
    pub rate: f64,
    /// Inclusive uniform range of task complexity.
    pub complexity: [f64; 2],
    /// Inclusive uniform range of task priority.
    pub priority: [f64; 2],
}

/// Arrival process. With no `phases`, the top-level rate and ranges apply
/// to every tick; otherwise the phases repeat in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorkloadParams {
    pub rate: f64,
    pub complexity: [f64; 2],
    pub priority: [f64; 2],
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub phases: Vec<Phase>,
}

impl Default for WorkloadParams {
    fn default() -> Self {
        Self {
            rate: 1.0,
            complexity: [1.0, 10.0],
            priority: [1.0, 10.0],
            phases: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorkloadError {
    #[error("invalid workload: {0}")]
    InvalidParams(String),
}

fn check_range(name: &str, r: [f64; 2]) -> Result<(), WorkloadError> {
    if r[0].is_finite() && r[1].is_finite() && r[0] > 0.0 && r[0] <= r[1] {
        Ok(())
    } else {
        Err(WorkloadError::InvalidParams(format!(
            "{name} range [{}, {}] must satisfy 0 < lo <= hi",
            r[0], r[1]
        )))
    }
}

fn check_rate(rate: f64) -> Result<(), WorkloadError> {
    if rate.is_finite() && rate > 0.0 {
        Ok(())
    } else {
        Err(WorkloadError::InvalidParams(format!(
            "arrival rate {rate} must be positive"
        )))
    }
}

impl WorkloadParams {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        if self.phases.is_empty() {
            check_rate(self.rate)?;
            check_range("complexity", self.complexity)?;
            check_range("priority", self.priority)?;
        }
        for p in &self.phases {
            if p.ticks == 0 {
                return Err(WorkloadError::InvalidParams("phase length must be positive".into()));
            }
            check_rate(p.rate)?;
            check_range("complexity", p.complexity)?;
            check_range("priority", p.priority)?;
        }
        Ok(())
    }

    /// Rate and ranges in effect at `tick`.
    pub fn phase_at(&self, tick: u64) -> (f64, [f64; 2], [f64; 2]) {
        if self.phases.is_empty() {
            return (self.rate, self.complexity, self.priority);
        }
        let cycle: u64 = self.phases.iter().map(|p| p.ticks).sum();
        let mut t = tick % cycle;
        for p in &self.phases {
            if t < p.ticks {
                return (p.rate, p.complexity, p.priority);
            }
            t -= p.ticks;
        }
        unreachable!("tick within cycle")
    }
}

fn uniform(rng: &mut impl Rng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..=r[1])
    }
}

/// Draws the task stream for ticks `0..duration`, ordered by submit time
/// with sequential ids. Endpoints are a uniformly chosen ordered pair of
/// distinct nodes.
pub fn generate_workload(
    params: &WorkloadParams,
    nodes: &[NodeId],
    duration: u64,
    seed: u64,
) -> Result<Vec<Task>, WorkloadError> {
    params.validate()?;
    if duration > 0 && nodes.len() < 2 {
        return Err(WorkloadError::InvalidParams(
            "workload needs at least two nodes".into(),
        ));
    }
    let mut rng = stream_rng(seed, Stream::Workload);
    let mut tasks = Vec::new();
    for tick in 0..duration {
        let (rate, complexity, priority) = params.phase_at(tick);
        let arrivals = Poisson::new(rate)
            .map_err(|e| WorkloadError::InvalidParams(e.to_string()))?
            .sample(&mut rng) as u64;
        for _ in 0..arrivals {
            let complexity = uniform(&mut rng, complexity);
            let priority = uniform(&mut rng, priority);
            let s = rng.random_range(0..nodes.len());
            let mut d = rng.random_range(0..nodes.len() - 1);
            if d >= s {
                d += 1;
            }
            tasks.push(Task {
                id: tasks.len() as u64,
                complexity,
                priority,
                source: nodes[s],
                destination: nodes[d],
                submit_time: tick,
            });
        }
    }
    Ok(tasks)
}

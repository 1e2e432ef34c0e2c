//! Scenario files: a TOML document with `nodes`, `edges` and `weights`
//! (required) plus optional `workload`, `filter`, `hierarchy`, `rl` and
//! `sim` blocks. Unknown keys are rejected. Nodes are named; ids are
//! assigned in file order.
//!
//! ```toml
//! [[nodes]]
//! name = "planner"
//! capability = 4.0
//! availability = 0.9
//! load_factor = 0.1
//! model_sophistication = 3.0
//! reliability = 0.99
//!
//! [[edges]]
//! from = "planner"
//! to = "coder"
//! bandwidth = 10.0
//! latency = 2.0
//! symmetric = true
//!
//! [weights]
//! w1 = 1.0
//! # ... through w7
//! ```

use std::fmt;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::filter::FilterPolicy;
use crate::model::{AgentGraph, AgentNode, GraphError, Link, NodeId, Violation, WeightVector};
use crate::rl::RlConfig;
use crate::sim::{HierarchyConfig, Scenario, ScenarioError, SimConfig, WorkloadParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeSpec {
    name: String,
    capability: f64,
    availability: f64,
    load_factor: f64,
    model_sophistication: f64,
    reliability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeSpec {
    from: String,
    to: String,
    bandwidth: f64,
    latency: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    symmetric: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsSpec {
    w1: f64,
    w2: f64,
    w3: f64,
    w4: f64,
    w5: f64,
    w6: f64,
    w7: f64,
}

impl From<WeightsSpec> for WeightVector {
    fn from(w: WeightsSpec) -> Self {
        WeightVector([w.w1, w.w2, w.w3, w.w4, w.w5, w.w6, w.w7])
    }
}

impl From<WeightVector> for WeightsSpec {
    fn from(w: WeightVector) -> Self {
        let [w1, w2, w3, w4, w5, w6, w7] = w.0;
        Self { w1, w2, w3, w4, w5, w6, w7 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    nodes: Vec<Spanned<NodeSpec>>,
    edges: Vec<Spanned<EdgeSpec>>,
    weights: Spanned<WeightsSpec>,
    workload: Option<Spanned<WorkloadParams>>,
    filter: Option<Spanned<FilterPolicy>>,
    hierarchy: Option<Spanned<HierarchyConfig>>,
    rl: Option<Spanned<RlConfig>>,
    sim: Option<Spanned<SimConfig>>,
}

#[derive(Serialize)]
struct ScenarioOut<'a> {
    nodes: Vec<NodeSpec>,
    edges: Vec<EdgeSpec>,
    weights: WeightsSpec,
    workload: &'a WorkloadParams,
    filter: &'a FilterPolicy,
    #[serde(skip_serializing_if = "Option::is_none")]
    hierarchy: Option<&'a HierarchyConfig>,
    rl: &'a RlConfig,
    sim: &'a SimConfig,
}

/// A problem in a scenario file, with the 1-based line it refers to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Diagnostic>),
}

impl ScenarioFileError {
    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            ScenarioFileError::Invalid(d) => d,
            ScenarioFileError::Io { .. } => &[],
        }
    }
}

fn line_of(text: &str, span: Range<usize>) -> usize {
    text[..span.start.min(text.len())].matches('\n').count() + 1
}

/// Parsed scenario together with the source lines of its parts, used to
/// point validation errors back into the file.
struct Located {
    scenario: Scenario,
    node_lines: Vec<usize>,
    edge_lines: Vec<((NodeId, NodeId), usize)>,
    block_lines: [Option<usize>; 6],
}

fn locate(text: &str) -> Result<Located, Vec<Diagnostic>> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| {
        vec![Diagnostic {
            line: e.span().map(|s| line_of(text, s)),
            message: e.message().to_string(),
        }]
    })?;

    let mut diagnostics = Vec::new();
    let mut graph = AgentGraph::new();
    let mut names: Vec<String> = Vec::new();
    let mut node_lines = Vec::new();
    for spec in &file.nodes {
        let line = line_of(text, spec.span());
        let n = spec.get_ref();
        if names.contains(&n.name) {
            diagnostics.push(Diagnostic {
                line: Some(line),
                message: format!("duplicate node name {:?}", n.name),
            });
            continue;
        }
        let id = NodeId(names.len());
        names.push(n.name.clone());
        node_lines.push(line);
        graph
            .add_node(AgentNode {
                id,
                capability: n.capability,
                availability: n.availability,
                load_factor: n.load_factor,
                model_sophistication: n.model_sophistication,
                reliability: n.reliability,
            })
            .expect("ids are fresh");
    }

    let mut edge_lines = Vec::new();
    for spec in &file.edges {
        let line = line_of(text, spec.span());
        let e = spec.get_ref();
        let lookup = |name: &str| names.iter().position(|n| n == name).map(NodeId);
        let (Some(from), Some(to)) = (lookup(&e.from), lookup(&e.to)) else {
            let missing = if lookup(&e.from).is_none() { &e.from } else { &e.to };
            diagnostics.push(Diagnostic {
                line: Some(line),
                message: format!("edge references unknown node {missing:?}"),
            });
            continue;
        };
        let mut pairs = vec![(from, to)];
        if e.symmetric {
            pairs.push((to, from));
        }
        for (a, b) in pairs {
            match graph.add_link(Link::new(a, b, e.bandwidth, e.latency)) {
                Ok(()) => edge_lines.push(((a, b), line)),
                Err(err) => diagnostics.push(Diagnostic {
                    line: Some(line),
                    message: match err {
                        GraphError::DuplicateLink(..) => {
                            format!("duplicate edge {} -> {}", names[a.0], names[b.0])
                        }
                        GraphError::SelfLoop(..) => format!("self-loop on {}", names[a.0]),
                        other => other.to_string(),
                    },
                }),
            }
        }
    }
    if !diagnostics.is_empty() {
        return Err(diagnostics);
    }

    let span_line = |span: Option<Range<usize>>| span.map(|s| line_of(text, s));
    let block_lines = [
        Some(line_of(text, file.weights.span())),
        span_line(file.workload.as_ref().map(Spanned::span)),
        span_line(file.filter.as_ref().map(Spanned::span)),
        span_line(file.hierarchy.as_ref().map(Spanned::span)),
        span_line(file.rl.as_ref().map(Spanned::span)),
        span_line(file.sim.as_ref().map(Spanned::span)),
    ];
    let scenario = Scenario {
        graph,
        names,
        weights: file.weights.into_inner().into(),
        workload: file.workload.map(Spanned::into_inner).unwrap_or_default(),
        filter: file
            .filter
            .map(Spanned::into_inner)
            .unwrap_or_else(FilterPolicy::disabled),
        hierarchy: file.hierarchy.map(Spanned::into_inner),
        rl: file.rl.map(Spanned::into_inner).unwrap_or_default(),
        sim: file.sim.map(Spanned::into_inner).unwrap_or_default(),
    };
    Ok(Located {
        scenario,
        node_lines,
        edge_lines,
        block_lines,
    })
}

impl Located {
    fn diagnose(&self, problem: &ScenarioError) -> Diagnostic {
        let s = &self.scenario;
        let line = match problem {
            ScenarioError::Graph(Violation::Node { id, .. }) => self.node_lines.get(id.0).copied(),
            ScenarioError::Graph(Violation::Link { from, to, .. }) => self
                .edge_lines
                .iter()
                .find(|(pair, _)| *pair == (*from, *to))
                .map(|(_, l)| *l),
            ScenarioError::Weights(_) => self.block_lines[0],
            ScenarioError::Workload(_) => self.block_lines[1],
            ScenarioError::Filter(_) => self.block_lines[2],
            ScenarioError::Hierarchy(_) => self.block_lines[3],
            ScenarioError::Rl(_) => self.block_lines[4],
            ScenarioError::Sim(_) => self.block_lines[5],
        };
        let message = match problem {
            ScenarioError::Graph(Violation::Node { id, message }) => {
                format!("node {:?}: {message}", s.node_name(*id))
            }
            ScenarioError::Graph(Violation::Link { from, to, message }) => {
                format!("edge {} -> {}: {message}", s.node_name(*from), s.node_name(*to))
            }
            other => other.to_string(),
        };
        Diagnostic { line, message }
    }
}

/// Parses and validates scenario text.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioFileError> {
    let located = locate(text).map_err(ScenarioFileError::Invalid)?;
    let problems = located.scenario.validate();
    if problems.is_empty() {
        Ok(located.scenario)
    } else {
        Err(ScenarioFileError::Invalid(
            problems.iter().map(|p| located.diagnose(p)).collect(),
        ))
    }
}

/// Parses scenario text without validating metric ranges, returning every
/// validation problem found alongside the scenario.
pub fn check_scenario(text: &str) -> Result<(Scenario, Vec<Diagnostic>), ScenarioFileError> {
    let located = locate(text).map_err(ScenarioFileError::Invalid)?;
    let diagnostics = located
        .scenario
        .validate()
        .iter()
        .map(|p| located.diagnose(p))
        .collect();
    Ok((located.scenario, diagnostics))
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioFileError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

/// Serializes a scenario back to the file format. Every link is written as
/// its own directed edge.
pub fn scenario_to_toml(scenario: &Scenario) -> String {
    let name = |id: NodeId| scenario.node_name(id);
    let out = ScenarioOut {
        nodes: scenario
            .graph
            .nodes()
            .map(|n| NodeSpec {
                name: name(n.id),
                capability: n.capability,
                availability: n.availability,
                load_factor: n.load_factor,
                model_sophistication: n.model_sophistication,
                reliability: n.reliability,
            })
            .collect(),
        edges: scenario
            .graph
            .links()
            .map(|l| EdgeSpec {
                from: name(l.from),
                to: name(l.to),
                bandwidth: l.bandwidth,
                latency: l.latency,
                symmetric: false,
            })
            .collect(),
        weights: scenario.weights.into(),
        workload: &scenario.workload,
        filter: &scenario.filter,
        hierarchy: scenario.hierarchy.as_ref(),
        rl: &scenario.rl,
        sim: &scenario.sim,
    };
    toml::to_string(&out).expect("scenario values are representable in TOML")
}

//! The `apbda` command line: `route`, `simulate`, `verify` and `validate`.
//!
//! Exit codes: 0 success, 1 input or I/O error, 2 unreachable destination,
//! 3 oracle disagreement.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::cost::explain_path;
use crate::hierarchy::build_clustering;
use crate::model::Task;
use crate::router::route as flat_route;
use crate::scenario::{check_scenario, load_scenario, ScenarioFileError};
use crate::sim::{run_with, HierarchyConfig, RouterStack, RunOptions, Scenario};
use crate::verify::verify_batch;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_UNREACHABLE: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "apbda", version, about = "Adaptive priority-aware routing for agent networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Route a single task and print the path.
    Route(RouteArgs),
    /// Run a scenario and export per-task outcomes and a summary.
    Simulate(SimulateArgs),
    /// Compare the router against exhaustive search on random instances.
    Verify(VerifyArgs),
    /// Check a scenario file and report every problem found.
    Validate { scenario: PathBuf },
}

#[derive(Debug, Args)]
pub struct PolicyFlags {
    /// Ignore the scenario's filter block.
    #[arg(long)]
    pub no_filter: bool,
    /// Route through clusters (defaults apply if the scenario has no
    /// hierarchy block).
    #[arg(long)]
    pub hierarchical: bool,
}

impl PolicyFlags {
    fn options(&self) -> RunOptions {
        RunOptions {
            no_filter: self.no_filter,
            hierarchical: self.hierarchical,
        }
    }
}

#[derive(Debug, Args)]
pub struct RouteArgs {
    pub scenario: PathBuf,
    /// Source node name (or numeric id).
    #[arg(long)]
    pub from: String,
    #[arg(long)]
    pub to: String,
    #[arg(long, default_value_t = 1.0)]
    pub complexity: f64,
    #[arg(long, default_value_t = 1.0)]
    pub priority: f64,
    /// Print each hop's seven cost terms.
    #[arg(long)]
    pub explain: bool,
    #[command(flatten)]
    pub policy: PolicyFlags,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub scenario: PathBuf,
    /// Directory receiving outcomes.jsonl and summary.json.
    #[arg(long, default_value = "apbda-out")]
    pub out: PathBuf,
    /// Also write the learned Q-table (JSON) here.
    #[arg(long)]
    pub qtable: Option<PathBuf>,
    /// Overrides `sim.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `sim.rl_seed`.
    #[arg(long)]
    pub rl_seed: Option<u64>,
    #[command(flatten)]
    pub policy: PolicyFlags,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Largest instance size (at most 10).
    #[arg(long, default_value_t = 8)]
    pub nodes: usize,
    #[arg(long, default_value_t = 1000)]
    pub instances: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Verify a deliberately broken router instead.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

/// Parses `args` (including the program name) and runs the command,
/// writing to `out` and `err`. Returns the process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Route(a) => cmd_route(&a, out),
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Validate { scenario } => cmd_validate(&scenario, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure(code, message)) => {
            let _ = writeln!(err, "error: {message}");
            code
        }
    }
}

struct Failure(i32, String);

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure(EXIT_INPUT, e.to_string())
    }
}

impl From<ScenarioFileError> for Failure {
    fn from(e: ScenarioFileError) -> Self {
        Failure(EXIT_INPUT, e.to_string())
    }
}

fn input(message: impl Into<String>) -> Failure {
    Failure(EXIT_INPUT, message.into())
}

fn policy_line(scenario: &Scenario, flags: &PolicyFlags) -> String {
    let mut parts = vec![
        format!("filter={}", if scenario.filter.is_active() && !flags.no_filter { "on" } else { "off" }),
        format!("hierarchical={}", scenario.hierarchical() || flags.hierarchical),
    ];
    if flags.no_filter {
        parts.push("override=--no-filter".into());
    }
    if flags.hierarchical {
        parts.push("override=--hierarchical".into());
    }
    parts.join(" ")
}

fn cmd_route(args: &RouteArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let mut scenario = load_scenario(&args.scenario)?;
    if args.policy.no_filter {
        scenario.filter.enabled = false;
    }
    if args.policy.hierarchical {
        scenario.hierarchy.get_or_insert_with(HierarchyConfig::default).enabled = true;
    }
    let problems = scenario.validate();
    if let Some(p) = problems.first() {
        return Err(input(p.to_string()));
    }
    let lookup = |name: &str| {
        scenario
            .resolve(name)
            .ok_or_else(|| input(format!("unknown node {name:?}")))
    };
    let task = Task::new(lookup(&args.from)?, lookup(&args.to)?, args.complexity, args.priority);
    if !(task.complexity.is_finite() && task.complexity >= 0.0) {
        return Err(input("complexity must be finite and >= 0"));
    }
    if !(task.priority.is_finite() && task.priority >= 0.0) {
        return Err(input("priority must be finite and >= 0"));
    }

    let clustering = match scenario.hierarchy.as_ref().filter(|h| h.enabled) {
        Some(h) => Some(
            build_clustering(&scenario.graph, h.cluster_count(scenario.graph.node_count()), h.seed)
                .map_err(|e| input(e.to_string()))?,
        ),
        None => None,
    };
    let stack = RouterStack {
        filter: &scenario.filter,
        clustering: clustering.as_ref(),
    };
    writeln!(out, "policy: {}", policy_line(&scenario, &args.policy))?;
    let result = match stack.route(&scenario.graph, &task, &scenario.weights, None) {
        Ok(r) => r,
        Err(e) if e.is_unreachable() => {
            writeln!(
                out,
                "unreachable: no path from {} to {}",
                scenario.node_name(task.source),
                scenario.node_name(task.destination)
            )?;
            return Ok(EXIT_UNREACHABLE);
        }
        Err(e) => return Err(input(e.to_string())),
    };

    let names: Vec<String> = result.path.iter().map(|&id| scenario.node_name(id)).collect();
    writeln!(out, "path: {}", names.join(" -> "))?;
    writeln!(out, "total_cost: {}", result.total_cost)?;
    writeln!(out, "nodes_expanded: {}", result.nodes_expanded)?;
    writeln!(out, "edges_relaxed: {}", result.edges_relaxed)?;
    if args.explain {
        let hops = explain_path(&scenario.graph, &task, &scenario.weights, &result.path)
            .map_err(|e| input(e.to_string()))?;
        for (pair, hop) in names.windows(2).zip(hops) {
            writeln!(out, "hop {} -> {}: {}", pair[0], pair[1], hop.total)?;
            for term in hop.terms {
                writeln!(out, "  {:<22} raw={} weighted={}", term.name, term.raw, term.weighted)?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let mut scenario = load_scenario(&args.scenario)?;
    if let Some(seed) = args.seed {
        scenario.sim.seed = seed;
    }
    if let Some(seed) = args.rl_seed {
        scenario.sim.rl_seed = Some(seed);
    }
    let report = run_with(&scenario, args.policy.options()).map_err(|e| input(e.to_string()))?;

    fs::create_dir_all(&args.out)?;
    let mut records = BufWriter::new(File::create(args.out.join("outcomes.jsonl"))?);
    report.write_records(&mut records)?;
    records.flush()?;
    let summary = report.summary(scenario.rl.high_priority_threshold);
    let text = serde_json::to_string_pretty(&summary).map_err(|e| input(e.to_string()))?;
    fs::write(args.out.join("summary.json"), format!("{text}\n"))?;
    if let Some(path) = &args.qtable {
        let table = report
            .q_table
            .as_ref()
            .ok_or_else(|| input("--qtable needs a scenario with rl.enabled = true"))?;
        let json = serde_json::to_string_pretty(table).map_err(|e| input(e.to_string()))?;
        fs::write(path, format!("{json}\n"))?;
    }
    writeln!(out, "{text}")?;
    Ok(EXIT_OK)
}

fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let router = if args.inject_fault {
        crate::router::route_fault_injected
    } else {
        flat_route
    };
    let report =
        verify_batch(args.nodes, args.instances, args.seed, router).map_err(|e| input(e.to_string()))?;
    writeln!(
        out,
        "verified {} instances: {} passed ({} unreachable), {} mismatched",
        report.instances,
        report.passed,
        report.unreachable,
        report.mismatches.len()
    )?;
    for m in &report.mismatches {
        writeln!(
            out,
            "mismatch: instance {} seed {} nodes {} density {}: {}",
            m.instance, m.seed, m.nodes, m.density, m.reason
        )?;
    }
    Ok(if report.all_passed() { EXIT_OK } else { EXIT_VERIFY })
}

fn cmd_validate(path: &PathBuf, out: &mut dyn Write) -> Result<i32, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
    let (scenario, diagnostics) = check_scenario(&text)?;
    if diagnostics.is_empty() {
        writeln!(
            out,
            "ok: {} nodes, {} links",
            scenario.graph.node_count(),
            scenario.graph.link_count()
        )?;
        Ok(EXIT_OK)
    } else {
        let all: Vec<String> = diagnostics.iter().map(ToString::to_string).collect();
        Err(input(all.join("\n")))
    }
}

//! `kindsim` command-line front end.

mod commands;
mod config;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use crate::commands::Failure;
use crate::config::{ConfigError, GraphArg, InitArg, RunConfig};

#[derive(Parser)]
#[command(name = "kindsim", version, about = "Simulate and verify the kindness belief dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory; writes trajectory.csv and summary.json.
    Simulate(Common),
    /// Exit-probability decay sweep; writes sweep.csv and sweep.json.
    Sweep(Common),
    /// Certify c_ε on the configured graph; writes certificate.json.
    Certify(Common),
    /// Replicated runs to δ-absorption; writes fixation.csv and fixation.json.
    Fixation(Common),
    /// Run the invariant battery and print one line per invariant.
    Verify(Common),
    /// Write the configured graph as an edge list to graph.edges.
    GraphGen(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads. Affects speed only, never results.
    #[arg(long, env = "KINDSIM_THREADS", value_name = "K")]
    threads: Option<usize>,
    /// complete:N, cycle:N, grid:WxH, er:N:P or file:PATH
    #[arg(long)]
    graph: Option<GraphArg>,
    #[arg(long)]
    mu_plus: Option<f64>,
    #[arg(long)]
    mu_minus: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    replicates: Option<u64>,
    #[arg(long)]
    event_budget: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Trajectory sampling stride in events.
    #[arg(long)]
    stride: Option<u64>,
    /// uniform or constant:V
    #[arg(long)]
    init: Option<InitArg>,
    /// Population sizes for sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<usize>>,
    #[arg(long, hide = true)]
    inject_fault: Option<Fault>,
}

/// Deliberate defects used to check that `verify` notices them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    RhoSign,
}

impl Common {
    fn overrides(&self) -> Map<String, Value> {
        let mut m = Map::new();
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        put("seed", self.seed.map(Value::from));
        put("out", self.out.as_ref().map(json));
        put("graph", self.graph.as_ref().map(|g| json(&g.0)));
        put("mu_plus", self.mu_plus.map(Value::from));
        put("mu_minus", self.mu_minus.map(Value::from));
        put("epsilon", self.epsilon.map(Value::from));
        put("replicates", self.replicates.map(Value::from));
        put("event_budget", self.event_budget.map(Value::from));
        put("delta", self.delta.map(Value::from));
        put("stride", self.stride.map(Value::from));
        put("init", self.init.as_ref().map(|i| json(&i.0)));
        put("ns", self.ns.as_ref().map(json));
        m
    }

    fn load(&self) -> Result<RunConfig, ConfigError> {
        let text = match &self.config {
            Some(path) => Some(
                std::fs::read_to_string(path)
                    .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?,
            ),
            None => None,
        };
        RunConfig::from_parts(text.as_deref(), self.overrides())
    }

    fn setup_threads(&self) -> Result<(), ConfigError> {
        if let Some(k) = self.threads {
            if k == 0 {
                return Err(ConfigError("--threads must be at least 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build_global()
                .map_err(|e| ConfigError(format!("cannot size the thread pool: {e}")))?;
        }
        Ok(())
    }
}

fn json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("config values serialize")
}

type Runner = fn(&RunConfig, Option<Fault>) -> Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run): (&Common, Runner) = match &cli.command {
        Command::Simulate(c) => (c, |cfg, _| commands::simulate(cfg)),
        Command::Sweep(c) => (c, |cfg, _| commands::sweep(cfg)),
        Command::Certify(c) => (c, |cfg, _| commands::certify(cfg)),
        Command::Fixation(c) => (c, |cfg, _| commands::fixation(cfg)),
        Command::Verify(c) => (c, verify::verify),
        Command::GraphGen(c) => (c, |cfg, _| commands::graph_gen(cfg)),
    };
    let result = common
        .setup_threads()
        .and_then(|()| common.load())
        .map_err(Failure::from)
        .and_then(|cfg| run(&cfg, common.inject_fault));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("kindsim: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}

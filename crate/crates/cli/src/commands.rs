use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use kindsim::dynamics::{run_observed, StopReason, StopRule};
use kindsim::experiments::{
    classify, decay_sweep, fixation_experiment, sweep_csv, Absorption, Classification, FixationConfig,
    StoppingSpec, SweepConfig,
};
use kindsim::format::g12;
use kindsim::functionals::certify_c_epsilon;
use kindsim::graph::generate;
use kindsim::{rng, Error, Graph};
use serde::Serialize;

use crate::config::{ConfigError, RunConfig};

/// Sub-seed labels: every command derives its graph, certification and
/// simulation streams from the master seed with these.
pub const GRAPH_SEED: u64 = 0;
pub const CERTIFY_SEED: u64 = 1;
pub const RUN_SEED: u64 = 2;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Graph(g) => Failure::Config(g.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

pub fn load_graph(cfg: &RunConfig) -> Result<Graph, Failure> {
    generate(&cfg.graph, rng::sub_seed(cfg.seed, GRAPH_SEED)).map_err(|e| Failure::Config(e.to_string()))
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct FirstExit {
    classification: Classification,
    event: u64,
    t: f64,
}

#[derive(Serialize)]
struct SimulationSummary {
    graph: String,
    n_vertices: usize,
    n_edges: usize,
    mu_plus: f64,
    mu_minus: f64,
    epsilon: f64,
    delta: f64,
    seed: u64,
    event_budget: u64,
    events: u64,
    time: f64,
    initial_x: f64,
    final_x: f64,
    /// `absorbed` or `event_budget`.
    stop_reason: &'static str,
    absorption: Absorption,
    /// First time the total left `[-εN, (1-ε)N]`; the run is not stopped there.
    first_exit: Option<FirstExit>,
}

pub fn simulate(cfg: &RunConfig) -> Result<(), Failure> {
    let p = cfg.params()?;
    let g = load_graph(cfg)?;
    let spec = StoppingSpec::new(cfg.epsilon, g.n_vertices())?;
    let mut r = rng::stream(rng::sub_seed(cfg.seed, RUN_SEED), 0);
    let mut state = cfg.init.build(&g, &mut r)?;
    let initial_x = state.total();
    let rule = StopRule::max_events(cfg.event_budget).with_absorption(cfg.delta);

    let mut csv = String::from("event,t,X\n");
    let mut last_row = None;
    let mut first_exit = None;
    let reason = run_observed(&mut state, &g, &p, &rule, &mut r, |s, _| {
        let k = s.event_count();
        if k % cfg.stride == 0 {
            let _ = writeln!(csv, "{k},{},{}", g12(s.clock()), g12(s.total()));
            last_row = Some(k);
        }
        if first_exit.is_none() {
            let c = classify(s, &spec).expect("sizes match");
            if c != Classification::Continue {
                first_exit = Some(FirstExit { classification: c, event: k, t: s.clock() });
            }
        }
    })?;
    if last_row != Some(state.event_count()) {
        let _ = writeln!(csv, "{},{},{}", state.event_count(), g12(state.clock()), g12(state.total()));
    }
    state.refresh_total();

    let (stop_reason, absorption) = match reason {
        StopReason::Absorbed(a) => ("absorbed", a),
        _ => ("event_budget", Absorption::None),
    };
    let summary = SimulationSummary {
        graph: cfg.graph.to_string(),
        n_vertices: g.n_vertices(),
        n_edges: g.n_edges(),
        mu_plus: p.mu_plus,
        mu_minus: p.mu_minus,
        epsilon: cfg.epsilon,
        delta: cfg.delta,
        seed: cfg.seed,
        event_budget: cfg.event_budget,
        events: state.event_count(),
        time: state.clock(),
        initial_x,
        final_x: state.total(),
        stop_reason,
        absorption,
        first_exit,
    };
    write_out(&cfg.out, "trajectory.csv", &csv)?;
    write_out(&cfg.out, "summary.json", &to_json(&summary))
}

#[derive(Serialize)]
struct SweepSummaryRow {
    n: usize,
    c_eps: f64,
    p_hat: f64,
    ci_low: f64,
    ci_high: f64,
    bound: f64,
    upper: f64,
    zero_hits: bool,
    bound_ok: bool,
    censored: u64,
}

#[derive(Serialize)]
struct SweepSummary {
    graph_family: String,
    log_slope: f64,
    monotone_ok: bool,
    all_bounds_ok: bool,
    rows: Vec<SweepSummaryRow>,
    certificates: Vec<kindsim::functionals::CertifiedC>,
}

pub fn sweep(cfg: &RunConfig) -> Result<(), Failure> {
    let sweep_cfg = SweepConfig {
        family: cfg.graph.clone(),
        ns: cfg.ns.clone(),
        params: cfg.params()?,
        epsilon: cfg.epsilon,
        replicates: cfg.replicates,
        event_budget: cfg.event_budget,
        certification: cfg.certification.clone(),
        seed: cfg.seed,
    };
    let report = decay_sweep(&sweep_cfg)?;
    let summary = SweepSummary {
        graph_family: cfg.graph.to_string(),
        log_slope: report.log_slope,
        monotone_ok: report.monotone_ok,
        all_bounds_ok: report.all_bounds_ok(),
        rows: report
            .rows
            .iter()
            .map(|r| SweepSummaryRow {
                n: r.n,
                c_eps: r.c_eps(),
                p_hat: r.estimate.p_hat,
                ci_low: r.estimate.ci_low,
                ci_high: r.estimate.ci_high,
                bound: r.bound,
                upper: r.upper,
                zero_hits: r.zero_hits,
                bound_ok: r.bound_ok,
                censored: r.censored,
            })
            .collect(),
        certificates: report.rows.iter().map(|r| r.certificate.clone()).collect(),
    };
    write_out(&cfg.out, "sweep.csv", &sweep_csv(&report.rows))?;
    write_out(&cfg.out, "sweep.json", &to_json(&summary))?;
    if !summary.all_bounds_ok {
        let bad: Vec<String> = summary.rows.iter().filter(|r| !r.bound_ok).map(|r| r.n.to_string()).collect();
        return Err(Failure::Runtime(format!("estimate exceeds the bound at N = {}", bad.join(", "))));
    }
    Ok(())
}

pub fn certify(cfg: &RunConfig) -> Result<(), Failure> {
    let p = cfg.params()?;
    let g = load_graph(cfg)?;
    let mut cert =
        certify_c_epsilon(&g, &p, cfg.epsilon, &cfg.certification, rng::sub_seed(cfg.seed, CERTIFY_SEED))?;
    cert.graph = cfg.graph.to_string();
    cert.seed = cfg.seed;
    println!("c_eps = {} (max Phi {})", g12(cert.c), g12(cert.max_phi));
    write_out(&cfg.out, "certificate.json", &to_json(&cert))
}

#[derive(Serialize)]
struct FixationSummary {
    graph: String,
    mu_plus: f64,
    mu_minus: f64,
    delta: f64,
    seed: u64,
    replicates: u64,
    plus: u64,
    minus: u64,
    censored: u64,
    fraction_plus: f64,
    fraction_minus: f64,
    mean_events_to_absorption: Option<f64>,
}

pub fn fixation(cfg: &RunConfig) -> Result<(), Failure> {
    let g = load_graph(cfg)?;
    let fix = FixationConfig {
        params: cfg.params()?,
        init: cfg.init.clone(),
        replicates: cfg.replicates,
        delta: cfg.delta,
        event_budget: cfg.event_budget,
        seed: rng::sub_seed(cfg.seed, RUN_SEED),
    };
    let rep = fixation_experiment(&g, &fix)?;
    let summary = FixationSummary {
        graph: cfg.graph.to_string(),
        mu_plus: fix.params.mu_plus,
        mu_minus: fix.params.mu_minus,
        delta: rep.delta,
        seed: cfg.seed,
        replicates: rep.replicates,
        plus: rep.plus,
        minus: rep.minus,
        censored: rep.censored,
        fraction_plus: rep.fraction_plus(),
        fraction_minus: rep.fraction_minus(),
        mean_events_to_absorption: rep.mean_events_to_absorption,
    };
    write_out(&cfg.out, "fixation.csv", &rep.csv())?;
    write_out(&cfg.out, "fixation.json", &to_json(&summary))
}

pub fn graph_gen(cfg: &RunConfig) -> Result<(), Failure> {
    let g = load_graph(cfg)?;
    write_out(&cfg.out, "graph.edges", &g.to_edge_list())
}

//! Runs to δ-absorption.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Absorption;
use crate::dynamics::{run, Params, State, StopReason, StopRule};
use crate::error::{Error, Result};
use crate::format::g12;
use crate::graph::Graph;
use crate::rng;

/// Where a replicate's initial configuration comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitSpec {
    Uniform,
    Constant { value: f64 },
    Explicit { beliefs: Vec<f64> },
}

impl InitSpec {
    pub fn build<R: rand::Rng + ?Sized>(&self, g: &Graph, rng: &mut R) -> Result<State> {
        let state = match self {
            InitSpec::Uniform => State::uniform(g, rng),
            InitSpec::Constant { value } => State::constant(g, *value)?,
            InitSpec::Explicit { beliefs } => State::from_beliefs(beliefs.clone())?,
        };
        state.check_graph(g)?;
        Ok(state)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixationConfig {
    pub params: Params,
    pub init: InitSpec,
    pub replicates: u64,
    pub delta: f64,
    pub event_budget: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FixationOutcome {
    Plus,
    Minus,
    Censored,
}

impl FixationOutcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            FixationOutcome::Plus => "plus",
            FixationOutcome::Minus => "minus",
            FixationOutcome::Censored => "censored",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixationRecord {
    pub replicate: u64,
    pub outcome: FixationOutcome,
    pub events: u64,
    pub final_x: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixationReport {
    pub delta: f64,
    pub replicates: u64,
    pub plus: u64,
    pub minus: u64,
    pub censored: u64,
    /// Mean event count over absorbed replicates; `None` if none absorbed.
    pub mean_events_to_absorption: Option<f64>,
    pub records: Vec<FixationRecord>,
}

impl FixationReport {
    pub fn fraction_plus(&self) -> f64 {
        self.plus as f64 / self.replicates as f64
    }

    pub fn fraction_minus(&self) -> f64 {
        self.minus as f64 / self.replicates as f64
    }

    pub fn absorbed(&self) -> u64 {
        self.plus + self.minus
    }

    pub fn csv(&self) -> String {
        let mut out = String::from(FIXATION_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!("{},{},{},{}\n", r.replicate, r.outcome.as_str(), r.events, g12(r.final_x)));
        }
        out
    }
}

pub const FIXATION_CSV_HEADER: &str = "replicate,outcome,events,final_X";

/// Runs every replicate until δ-absorption or the event budget.
pub fn fixation_experiment(g: &Graph, cfg: &FixationConfig) -> Result<FixationReport> {
    if cfg.replicates == 0 {
        return Err(Error::InvalidInput("replicates must be at least 1".into()));
    }
    cfg.params.validate()?;
    super::check_delta(cfg.delta)?;
    let rule = StopRule::max_events(cfg.event_budget).with_absorption(cfg.delta);
    let records: Vec<FixationRecord> = (0..cfg.replicates)
        .into_par_iter()
        .map(|i| -> Result<FixationRecord> {
            let mut r = rng::stream(cfg.seed, i);
            let mut state = cfg.init.build(g, &mut r)?;
            let out = run(&mut state, g, &cfg.params, &rule, &mut r, None)?;
            let outcome = match out.reason {
                StopReason::Absorbed(Absorption::PlusAbsorbed) => FixationOutcome::Plus,
                StopReason::Absorbed(Absorption::MinusAbsorbed) => FixationOutcome::Minus,
                _ => FixationOutcome::Censored,
            };
            state.refresh_total();
            Ok(FixationRecord { replicate: i, outcome, events: out.events, final_x: state.total() })
        })
        .collect::<Result<_>>()?;
    let count = |o: FixationOutcome| records.iter().filter(|r| r.outcome == o).count() as u64;
    let (plus, minus, censored) =
        (count(FixationOutcome::Plus), count(FixationOutcome::Minus), count(FixationOutcome::Censored));
    let absorbed_events: Vec<u64> = records
        .iter()
        .filter(|r| r.outcome != FixationOutcome::Censored)
        .map(|r| r.events)
        .collect();
    let mean_events_to_absorption = (!absorbed_events.is_empty())
        .then(|| absorbed_events.iter().sum::<u64>() as f64 / absorbed_events.len() as f64);
    Ok(FixationReport {
        delta: cfg.delta,
        replicates: cfg.replicates,
        plus,
        minus,
        censored,
        mean_events_to_absorption,
        records,
    })
}

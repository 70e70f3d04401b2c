//! Stopping times, absorption, the one-step enumeration oracle, and the
//! Monte Carlo experiments built on them.

mod estimate;
mod fixation;

pub use estimate::{
    decay_sweep, estimate_exit_prob, least_squares_slope, sweep_csv, wilson_interval, Estimate,
    ExitEstimate, SweepConfig, SweepReport, SweepRow, SWEEP_CSV_HEADER,
};
pub use fixation::{
    fixation_experiment, FixationConfig, FixationOutcome, FixationRecord, FixationReport, InitSpec,
    FIXATION_CSV_HEADER,
};

use serde::{Deserialize, Serialize};

use crate::dynamics::{kind_prob, updated_belief, Params, State};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Thresholds `lower = -εN` and `upper = (1-ε)N` on the total kindness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingSpec {
    pub epsilon: f64,
    pub n: usize,
    pub lower: f64,
    pub upper: f64,
}

impl StoppingSpec {
    pub fn new(epsilon: f64, n: usize) -> Result<StoppingSpec> {
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(Error::OutOfRange { what: "epsilon", value: epsilon });
        }
        if n == 0 {
            return Err(Error::InvalidInput("population size must be positive".into()));
        }
        let nf = n as f64;
        Ok(StoppingSpec { epsilon, n, lower: -epsilon * nf, upper: (1.0 - epsilon) * nf })
    }

    /// Symmetric thresholds `±εN`, used to compare both exits when
    /// `mu_plus = mu_minus`.
    pub fn symmetric(epsilon: f64, n: usize) -> Result<StoppingSpec> {
        let mut spec = StoppingSpec::new(epsilon, n)?;
        spec.upper = epsilon * n as f64;
        Ok(spec)
    }

    pub(crate) fn check_n(&self, n: usize) -> Result<()> {
        if n != self.n {
            return Err(Error::MismatchedN { expected: self.n, found: n });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Continue,
    HitMinus,
    HitPlus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Absorption {
    None,
    PlusAbsorbed,
    MinusAbsorbed,
}

#[inline]
pub(crate) fn classify_total(total: f64, spec: &StoppingSpec) -> Classification {
    if total < spec.lower {
        Classification::HitMinus
    } else if total > spec.upper {
        Classification::HitPlus
    } else {
        Classification::Continue
    }
}

/// Strict comparisons: a total exactly on a threshold continues.
pub fn classify(state: &State, spec: &StoppingSpec) -> Result<Classification> {
    spec.check_n(state.n())?;
    Ok(classify_total(state.total(), spec))
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if (0.0..1.0).contains(&delta) {
        Ok(())
    } else {
        Err(Error::OutOfRange { what: "delta", value: delta })
    }
}

pub(crate) fn absorption_of(all_high: bool, all_low: bool) -> Absorption {
    match (all_high, all_low) {
        (true, _) => Absorption::PlusAbsorbed,
        (false, true) => Absorption::MinusAbsorbed,
        (false, false) => Absorption::None,
    }
}

/// Declares absorption when every belief is within `delta` of the same
/// extreme. `delta = 0` demands exact `±1`.
pub fn detect_absorption(state: &State, delta: f64) -> Result<Absorption> {
    check_delta(delta)?;
    let b = state.beliefs();
    Ok(absorption_of(
        b.iter().all(|&v| v >= 1.0 - delta),
        b.iter().all(|&v| v <= -1.0 + delta),
    ))
}

/// Default guard on the number of oriented edges the oracle enumerates.
pub const ORACLE_EDGE_LIMIT: usize = 10_000;

/// Exact expected rates of change of `X` and `c^{-X}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneStepDrift {
    pub drift_x: f64,
    pub drift_cx: f64,
}

/// Brute-force generator applied to `X` and `c^{-X}`: every oriented edge
/// fires at rate one, and both of its outcomes are enumerated with their
/// probabilities and applied to a copy of the configuration.
pub fn one_step_oracle(state: &State, g: &Graph, p: &Params, c: f64) -> Result<OneStepDrift> {
    one_step_oracle_limited(state, g, p, c, ORACLE_EDGE_LIMIT)
}

pub fn one_step_oracle_limited(
    state: &State,
    g: &Graph,
    p: &Params,
    c: f64,
    limit: usize,
) -> Result<OneStepDrift> {
    state.check_graph(g)?;
    p.validate()?;
    if !(c > 0.0) {
        return Err(Error::NonPositiveC(c));
    }
    if g.n_oriented_edges() > limit {
        return Err(Error::TooLarge { oriented_edges: g.n_oriented_edges(), limit });
    }
    let before: Vec<f64> = state.beliefs().to_vec();
    let x_before: f64 = before.iter().sum();
    let cx_before = c.powf(-x_before);
    let mut drift_x = 0.0;
    let mut drift_cx = 0.0;
    let mut after = before.clone();
    for &(x, y) in g.oriented_edges() {
        let (x, y) = (x as usize, y as usize);
        let pk = kind_prob(before[x]);
        for (kind, prob) in [(true, pk), (false, 1.0 - pk)] {
            if prob == 0.0 {
                continue;
            }
            after[y] = updated_belief(before[y], kind, p);
            let x_after: f64 = after.iter().sum();
            drift_x += prob * (x_after - x_before);
            drift_cx += prob * (c.powf(-x_after) - cx_before);
            after[y] = before[y];
        }
    }
    Ok(OneStepDrift { drift_x, drift_cx })
}

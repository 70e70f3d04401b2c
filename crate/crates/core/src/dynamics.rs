//! The configuration and its continuous-time evolution.
//!
//! Each oriented edge `x -> y` carries a rate-one exponential clock. The
//! superposition of all `2|E|` clocks fires at rate `2|E|`, and because the
//! rates are equal the firing edge is uniform among the oriented edges. On
//! firing, `x` sends a kind interaction with probability `(1 + ξ(x)) / 2`;
//! a kind interaction moves `ξ(y)` toward `+1` by the fraction `mu_plus`,
//! an unkind one toward `-1` by the fraction `mu_minus`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{absorption_of, classify_total, Absorption, Classification, StoppingSpec};
use crate::graph::Graph;

/// The cached total is recomputed from scratch every `2^20` events.
pub const TOTAL_REFRESH_INTERVAL: u64 = 1 << 20;

/// Sensitivities to kind (`mu_plus`) and unkind (`mu_minus`) interactions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub mu_plus: f64,
    pub mu_minus: f64,
}

impl Params {
    pub fn new(mu_plus: f64, mu_minus: f64) -> Result<Params> {
        let p = Params { mu_plus, mu_minus };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (what, value) in [("mu_plus", self.mu_plus), ("mu_minus", self.mu_minus)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::OutOfRange { what, value });
            }
        }
        Ok(())
    }

    /// `mu_minus < mu_plus`: the regime where the total kindness drifts up.
    pub fn is_optimist(&self) -> bool {
        self.mu_minus < self.mu_plus
    }

    /// Parameters of the mirrored model under `ξ -> -ξ`.
    pub fn mirrored(&self) -> Params {
        Params { mu_plus: self.mu_minus, mu_minus: self.mu_plus }
    }
}

pub(crate) fn check_belief(what: &'static str, value: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange { what, value })
    }
}

#[inline]
pub(crate) fn kind_prob(xi_x: f64) -> f64 {
    (0.5 + 0.5 * xi_x).clamp(0.0, 1.0)
}

#[inline]
pub(crate) fn updated_belief(xi_y: f64, kind: bool, p: &Params) -> f64 {
    let next = if kind {
        xi_y + p.mu_plus * (1.0 - xi_y)
    } else {
        xi_y - p.mu_minus * (1.0 + xi_y)
    };
    next.clamp(-1.0, 1.0)
}

/// Probability that a sender with belief `xi_x` is kind.
pub fn kind_probability(xi_x: f64) -> Result<f64> {
    check_belief("xi_x", xi_x)?;
    Ok(kind_prob(xi_x))
}

/// New belief of a recipient after a kind or unkind interaction.
pub fn apply_interaction(xi_y: f64, kind: bool, p: &Params) -> Result<f64> {
    check_belief("xi_y", xi_y)?;
    p.validate()?;
    Ok(updated_belief(xi_y, kind, p))
}

/// One oriented-edge activation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub dt: f64,
    pub source: usize,
    pub target: usize,
    pub kind: bool,
    pub old_belief: f64,
    pub new_belief: f64,
}

/// Beliefs plus clock, cached total kindness and event counter.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    beliefs: Vec<f64>,
    clock: f64,
    total: f64,
    event_count: u64,
}

impl State {
    /// I.i.d. uniform beliefs on `[-1, 1]`.
    pub fn uniform<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> State {
        State::uniform_n(g.n_vertices(), rng)
    }

    pub(crate) fn uniform_n<R: Rng + ?Sized>(n: usize, rng: &mut R) -> State {
        let beliefs = (0..n).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect();
        State::fresh(beliefs)
    }

    pub fn constant(g: &Graph, value: f64) -> Result<State> {
        check_belief("value", value)?;
        Ok(State::fresh(vec![value; g.n_vertices()]))
    }

    pub fn from_beliefs(beliefs: Vec<f64>) -> Result<State> {
        if beliefs.is_empty() {
            return Err(Error::InvalidInput("a configuration needs at least one vertex".into()));
        }
        for &b in &beliefs {
            check_belief("belief", b)?;
        }
        Ok(State::fresh(beliefs))
    }

    fn fresh(beliefs: Vec<f64>) -> State {
        let total = beliefs.iter().sum();
        State { beliefs, clock: 0.0, total, event_count: 0 }
    }

    pub fn n(&self) -> usize {
        self.beliefs.len()
    }

    pub fn beliefs(&self) -> &[f64] {
        &self.beliefs
    }

    pub fn belief(&self, x: usize) -> f64 {
        self.beliefs[x]
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    /// Cached total kindness `X = Σ ξ(x)`.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn event_count(&self) -> u64 {
        self.event_count
    }

    pub fn refresh_total(&mut self) {
        self.total = self.beliefs.iter().sum();
    }

    /// The mirrored configuration `-ξ`, with clock and counters reset.
    pub fn negated(&self) -> State {
        State::fresh(self.beliefs.iter().map(|b| -b).collect())
    }

    pub(crate) fn check_graph(&self, g: &Graph) -> Result<()> {
        if self.n() != g.n_vertices() {
            return Err(Error::MismatchedN { expected: g.n_vertices(), found: self.n() });
        }
        Ok(())
    }

    /// Fires one oriented edge and applies its interaction.
    ///
    /// Draw order per event: holding time, oriented-edge index, kind coin.
    pub fn step<R: Rng + ?Sized>(&mut self, g: &Graph, p: &Params, rng: &mut R) -> Event {
        let edges = g.oriented_edges();
        let rate = edges.len() as f64;
        let dt = -(1.0 - rng.gen::<f64>()).ln() / rate;
        let (x, y) = edges[rng.gen_range(0..edges.len())];
        let (source, target) = (x as usize, y as usize);
        let kind = rng.gen::<f64>() < kind_prob(self.beliefs[source]);
        let old_belief = self.beliefs[target];
        let new_belief = updated_belief(old_belief, kind, p);
        self.beliefs[target] = new_belief;
        self.clock += dt;
        self.total += new_belief - old_belief;
        self.event_count += 1;
        if self.event_count.is_multiple_of(TOTAL_REFRESH_INTERVAL) {
            self.refresh_total();
        }
        Event { dt, source, target, kind, old_belief, new_belief }
    }
}

/// When to stop a run. The event budget is mandatory, so every run ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub max_events: u64,
    pub thresholds: Option<StoppingSpec>,
    /// Absorption tolerance δ.
    pub absorption: Option<f64>,
}

impl StopRule {
    pub fn max_events(max_events: u64) -> StopRule {
        StopRule { max_events, thresholds: None, absorption: None }
    }

    pub fn with_thresholds(mut self, spec: StoppingSpec) -> StopRule {
        self.thresholds = Some(spec);
        self
    }

    pub fn with_absorption(mut self, delta: f64) -> StopRule {
        self.absorption = Some(delta);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EventBudget,
    Threshold(Classification),
    Absorbed(Absorption),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub event: u64,
    pub t: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub reason: StopReason,
    /// Events executed by this run.
    pub events: u64,
    pub trajectory: Vec<TrajectoryPoint>,
}

/// Counts of vertices within δ of `+1` and of `-1`, maintained per event.
struct AbsorptionTracker {
    delta: f64,
    high: usize,
    low: usize,
}

impl AbsorptionTracker {
    fn new(state: &State, delta: f64) -> AbsorptionTracker {
        let mut t = AbsorptionTracker { delta, high: 0, low: 0 };
        for &b in state.beliefs() {
            t.add(b, 1);
        }
        t
    }

    fn add(&mut self, b: f64, sign: isize) {
        if b >= 1.0 - self.delta {
            self.high = self.high.wrapping_add_signed(sign);
        }
        if b <= -1.0 + self.delta {
            self.low = self.low.wrapping_add_signed(sign);
        }
    }

    fn status(&self, n: usize) -> Absorption {
        absorption_of(self.high == n, self.low == n)
    }
}

/// Runs the dynamics until `stop` fires, calling `observe` on the starting
/// state and after every event. Stop conditions are checked before each
/// event in the order thresholds, absorption, budget.
pub fn run_observed<R, F>(
    state: &mut State,
    g: &Graph,
    p: &Params,
    stop: &StopRule,
    rng: &mut R,
    mut observe: F,
) -> Result<StopReason>
where
    R: Rng + ?Sized,
    F: FnMut(&State, Option<&Event>),
{
    state.check_graph(g)?;
    p.validate()?;
    if let Some(spec) = &stop.thresholds {
        spec.check_n(state.n())?;
    }
    let mut tracker = match stop.absorption {
        Some(delta) => {
            crate::experiments::check_delta(delta)?;
            Some(AbsorptionTracker::new(state, delta))
        }
        None => None,
    };
    observe(state, None);
    let mut executed = 0u64;
    loop {
        if let Some(spec) = &stop.thresholds {
            let c = classify_total(state.total(), spec);
            if c != Classification::Continue {
                return Ok(StopReason::Threshold(c));
            }
        }
        if let Some(tr) = &tracker {
            let a = tr.status(state.n());
            if a != Absorption::None {
                return Ok(StopReason::Absorbed(a));
            }
        }
        if executed >= stop.max_events {
            return Ok(StopReason::EventBudget);
        }
        let ev = state.step(g, p, rng);
        executed += 1;
        if let Some(tr) = &mut tracker {
            tr.add(ev.old_belief, -1);
            tr.add(ev.new_belief, 1);
        }
        observe(state, Some(&ev));
    }
}

/// [`run_observed`] recording `(event, t, X)` every `stride` events plus the
/// final state. `stride = None` records nothing.
pub fn run<R: Rng + ?Sized>(
    state: &mut State,
    g: &Graph,
    p: &Params,
    stop: &StopRule,
    rng: &mut R,
    stride: Option<u64>,
) -> Result<RunOutcome> {
    if stride == Some(0) {
        return Err(Error::InvalidInput("trajectory stride must be positive".into()));
    }
    let start = state.event_count();
    let mut trajectory = Vec::new();
    let reason = run_observed(state, g, p, stop, rng, |s, _| {
        if let Some(k) = stride {
            if (s.event_count() - start).is_multiple_of(k) {
                trajectory.push(TrajectoryPoint { event: s.event_count(), t: s.clock(), total: s.total() });
            }
        }
    })?;
    if stride.is_some() && trajectory.last().map(|pt| pt.event) != Some(state.event_count()) {
        trajectory.push(TrajectoryPoint {
            event: state.event_count(),
            t: state.clock(),
            total: state.total(),
        });
    }
    Ok(RunOutcome { reason, events: state.event_count() - start, trajectory })
}

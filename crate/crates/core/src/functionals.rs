//! Closed-form drift functionals and the numeric certification of `c_ε`.
//!
//! For an oriented edge `x -> y` the expected change of `ξ(y)` per firing is
//! `rho(ξ(x), ξ(y))`, and the expected relative change of `c^{-X}` per firing
//! is `phi(ξ(x), ξ(y), c)`. Summed over the two orientations of an edge the
//! drift collapses to `(mu_plus - mu_minus)(1 - ξ(x)ξ(y))`, which is what
//! makes `X` a submartingale when `mu_minus < mu_plus`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{check_belief, kind_prob, run_observed, Params, State, StopRule};
use crate::error::{Error, Result};
use crate::experiments::{classify_total, Classification, StoppingSpec};
use crate::graph::Graph;
use crate::rng;

/// Fresh (uncached) sum of all beliefs.
pub fn total_kindness(state: &State) -> f64 {
    state.beliefs().iter().sum()
}

#[inline]
pub(crate) fn rho_raw(xi_x: f64, xi_y: f64, p: &Params) -> f64 {
    kind_prob(xi_x) * p.mu_plus * (1.0 - xi_y) - (0.5 - 0.5 * xi_x) * p.mu_minus * (1.0 + xi_y)
}

#[inline]
pub(crate) fn pair_drift_raw(xi_x: f64, xi_y: f64, p: &Params) -> f64 {
    (p.mu_plus - p.mu_minus) * (1.0 - xi_x * xi_y)
}

#[inline]
pub(crate) fn phi_raw(xi_x: f64, xi_y: f64, ln_c: f64, p: &Params) -> f64 {
    let kind = (-p.mu_plus * (1.0 - xi_y) * ln_c).exp();
    let unkind = (p.mu_minus * (1.0 + xi_y) * ln_c).exp();
    (0.5 + 0.5 * xi_x) * kind + (0.5 - 0.5 * xi_x) * unkind - 1.0
}

fn check_pair(xi_x: f64, xi_y: f64) -> Result<()> {
    check_belief("xi_x", xi_x)?;
    check_belief("xi_y", xi_y)
}

fn check_c(c: f64) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveC(c))
    }
}

/// Expected change of `ξ(y)` when `x -> y` fires.
pub fn rho(xi_x: f64, xi_y: f64, p: &Params) -> Result<f64> {
    check_pair(xi_x, xi_y)?;
    Ok(rho_raw(xi_x, xi_y, p))
}

/// Combined drift of both orientations of an edge.
pub fn pair_drift(xi_x: f64, xi_y: f64, p: &Params) -> Result<f64> {
    check_pair(xi_x, xi_y)?;
    Ok(pair_drift_raw(xi_x, xi_y, p))
}

/// `d/ds E[X_{t+s} - X_t | ξ_t]` at `s = 0`.
pub fn generator_drift_x(state: &State, g: &Graph, p: &Params) -> Result<f64> {
    state.check_graph(g)?;
    let b = state.beliefs();
    Ok(g.edges().iter().map(|&(x, y)| pair_drift_raw(b[x], b[y], p)).sum())
}

/// Expected relative change of `c^{-X}` when `x -> y` fires.
pub fn phi(xi_x: f64, xi_y: f64, c: f64, p: &Params) -> Result<f64> {
    check_pair(xi_x, xi_y)?;
    check_c(c)?;
    Ok(phi_raw(xi_x, xi_y, c.ln(), p))
}

/// Sum of [`phi`] over all oriented edges.
///
/// Evaluated per target vertex: the kind and unkind factors of `phi` depend
/// only on `ξ(y)`, so the sum over senders reduces to the neighbor sum of
/// kind probabilities.
pub fn big_phi(state: &State, g: &Graph, c: f64, p: &Params) -> Result<f64> {
    state.check_graph(g)?;
    check_c(c)?;
    let kind_weights = neighbor_kind_weights(state.beliefs(), g);
    Ok(big_phi_with(state.beliefs(), &kind_weights, g, c.ln(), p))
}

fn neighbor_kind_weights(beliefs: &[f64], g: &Graph) -> Vec<f64> {
    (0..g.n_vertices())
        .map(|y| g.neighbors(y).iter().map(|&x| kind_prob(beliefs[x])).sum())
        .collect()
}

fn big_phi_with(beliefs: &[f64], kind_weights: &[f64], g: &Graph, ln_c: f64, p: &Params) -> f64 {
    if ln_c == 0.0 {
        return 0.0;
    }
    beliefs
        .iter()
        .zip(kind_weights)
        .enumerate()
        .map(|(y, (&xi_y, &a))| {
            let deg = g.degree(y) as f64;
            let kind = (-p.mu_plus * (1.0 - xi_y) * ln_c).exp();
            let unkind = (p.mu_minus * (1.0 + xi_y) * ln_c).exp();
            a * (kind - 1.0) + (deg - a) * (unkind - 1.0)
        })
        .sum()
}

/// Below this distance from `c = 1` the moment generating function switches
/// to its series expansion.
pub const MGF_SERIES_CUTOFF: f64 = 1e-4;

/// `E[c^{-U}]` for `U` uniform on `[-1, 1]`, i.e. `(c² - 1) / (2c ln c)`.
pub fn mgf_uniform(c: f64) -> Result<f64> {
    check_c(c)?;
    if (c - 1.0).abs() <= MGF_SERIES_CUTOFF {
        // sinh(l)/l = 1 + l²/6 + l⁴/120 + O(l⁶)
        let l2 = c.ln().powi(2);
        return Ok(1.0 + l2 / 6.0 + l2 * l2 / 120.0);
    }
    Ok((c * c - 1.0) / (2.0 * c * c.ln()))
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 0.5 {
        Ok(())
    } else {
        Err(Error::OutOfRange { what: "epsilon", value: epsilon })
    }
}

/// `min(g(c) - 1/2, c^{ε/2} - g(c))`; positive iff both strict
/// inequalities `1/2 < g(c) < c^{ε/2}` hold.
pub fn mgf_bound_margin(c: f64, epsilon: f64) -> Result<f64> {
    if !(c > 1.0) {
        return Err(Error::OutOfRange { what: "c", value: c });
    }
    check_epsilon(epsilon)?;
    let g = mgf_uniform(c)?;
    Ok((g - 0.5).min(c.powf(epsilon / 2.0) - g))
}

pub fn mgf_bound_check(c: f64, epsilon: f64) -> Result<bool> {
    Ok(mgf_bound_margin(c, epsilon)? > 0.0)
}

/// Largest `c* = 1 + k·step` such that every grid point in `(1, c*]` passes
/// [`mgf_bound_check`]; `None` when the first grid point already fails.
pub fn mgf_bound_interval(epsilon: f64, step: f64, c_limit: f64) -> Result<Option<f64>> {
    if !(step > 0.0) {
        return Err(Error::InvalidInput(format!("grid step must be positive, got {step}")));
    }
    let mut best = None;
    let mut k = 1u64;
    loop {
        let c = 1.0 + k as f64 * step;
        if c > c_limit || !mgf_bound_check(c, epsilon)? {
            return Ok(best);
        }
        best = Some(c);
        k += 1;
    }
}

/// Neighbors `(x, y)` with `ξ(x)ξ(y) <= 1 - ε`.
///
/// If some belief lies in `[-ε, 1-ε]`, the lowest such vertex is paired with
/// its lowest neighbor. Otherwise every belief is below `-ε` or above `1-ε`
/// and both sides are occupied; the shortest path from the lowest vertex
/// below to the lowest vertex above contains an adjacent pair that crosses.
pub fn witness_pair(state: &State, g: &Graph, epsilon: f64) -> Result<(usize, usize)> {
    state.check_graph(g)?;
    check_epsilon(epsilon)?;
    let b = state.beliefs();
    let low = -epsilon;
    let high = 1.0 - epsilon;
    if b.iter().all(|&v| v < low) || b.iter().all(|&v| v > high) {
        return Err(Error::PreconditionViolated(
            "all beliefs lie on one side of the stopping interval".into(),
        ));
    }
    let pair = if let Some(x) = b.iter().position(|&v| (low..=high).contains(&v)) {
        (x, g.neighbors(x)[0])
    } else {
        let from = b.iter().position(|&v| v < low).expect("checked above");
        let to = b.iter().position(|&v| v > high).expect("checked above");
        let path = g.shortest_path(from, to)?;
        let w = path
            .windows(2)
            .find(|w| b[w[0]] < low && b[w[1]] > high)
            .expect("a path from below to above crosses");
        (w[0], w[1])
    };
    debug_assert!(b[pair.0] * b[pair.1] <= high);
    Ok(pair)
}

/// Parameters of the empirical `c_ε` search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CertificationSpec {
    /// Largest candidate; the grid descends from here toward 1.
    pub c_max: f64,
    pub grid_points: usize,
    /// Ratio between consecutive values of `c - 1` on the grid.
    pub grid_ratio: f64,
    /// Stopped trajectories whose visited states enter the ensemble.
    pub trajectories: u64,
    /// Uniform random configurations conditioned on being before `T_ε`.
    pub random_states: u64,
    pub event_budget: u64,
}

impl Default for CertificationSpec {
    fn default() -> Self {
        CertificationSpec {
            c_max: 1.5,
            grid_points: 50,
            grid_ratio: 0.8,
            trajectories: 100,
            random_states: 10_000,
            event_budget: 10_000_000,
        }
    }
}

impl CertificationSpec {
    pub fn grid(&self) -> Vec<f64> {
        (0..self.grid_points)
            .map(|k| 1.0 + (self.c_max - 1.0) * self.grid_ratio.powi(k as i32))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.c_max > 1.0) || self.grid_points == 0 || !(self.grid_ratio > 0.0 && self.grid_ratio < 1.0) {
            return Err(Error::InvalidInput(format!(
                "certification grid needs c_max > 1, points > 0 and ratio in (0,1); got {}, {}, {}",
                self.c_max, self.grid_points, self.grid_ratio
            )));
        }
        Ok(())
    }
}

/// One candidate on the certification grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub c: f64,
    pub max_phi: f64,
    pub mgf_bound_margin: f64,
}

/// A certified `c_ε` together with the evidence behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifiedC {
    pub c: f64,
    pub epsilon: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub graph: String,
    pub n_vertices: usize,
    pub n_edges: usize,
    pub seed: u64,
    pub trajectories: u64,
    pub trajectory_states: u64,
    pub censored_trajectories: u64,
    pub random_states: u64,
    pub extreme_states: u64,
    /// Largest `Φ(state, c)` over the ensemble at the certified `c`.
    pub max_phi: f64,
    pub mgf_bound_margin: f64,
    pub grid: Vec<GridPoint>,
}

/// Running maxima of `Φ` over the grid for a stream of states.
struct PhiProfile {
    ln_grid: Vec<f64>,
    max_phi: Vec<f64>,
    states: u64,
}

impl PhiProfile {
    fn new(ln_grid: &[f64]) -> PhiProfile {
        PhiProfile { ln_grid: ln_grid.to_vec(), max_phi: vec![f64::NEG_INFINITY; ln_grid.len()], states: 0 }
    }

    fn observe(&mut self, beliefs: &[f64], g: &Graph, p: &Params) {
        let weights = neighbor_kind_weights(beliefs, g);
        for (m, &l) in self.max_phi.iter_mut().zip(&self.ln_grid) {
            *m = m.max(big_phi_with(beliefs, &weights, g, l, p));
        }
        self.states += 1;
    }

    fn merge(mut self, other: PhiProfile) -> PhiProfile {
        for (a, b) in self.max_phi.iter_mut().zip(other.max_phi) {
            *a = a.max(b);
        }
        self.states += other.states;
        self
    }
}

/// Searches the grid from its largest value downward for a `c` with
/// `Φ(state, c) <= 0` on every ensemble state and the bounds `1/2 < g(c) < c^{ε/2}`.
///
/// The ensemble holds every pre-`T_ε` state visited by the stopped
/// trajectories, uniform random pre-`T_ε` configurations, and extreme
/// configurations with a witness edge at `{-ε, 1-ε}` and `±1` elsewhere.
pub fn certify_c_epsilon(
    g: &Graph,
    p: &Params,
    epsilon: f64,
    spec: &CertificationSpec,
    seed: u64,
) -> Result<CertifiedC> {
    p.validate()?;
    if !p.is_optimist() {
        return Err(Error::DegenerateDrift { mu_plus: p.mu_plus, mu_minus: p.mu_minus });
    }
    check_epsilon(epsilon)?;
    spec.validate()?;
    let n = g.n_vertices();
    let stopping = StoppingSpec::new(epsilon, n)?;
    let grid = spec.grid();
    let ln_grid: Vec<f64> = grid.iter().map(|c| c.ln()).collect();

    let traj_seed = rng::sub_seed(seed, 0);
    let rule = StopRule::max_events(spec.event_budget).with_thresholds(stopping);
    let traj_results: Vec<(PhiProfile, bool)> = (0..spec.trajectories)
        .into_par_iter()
        .map(|i| -> Result<(PhiProfile, bool)> {
            let mut r = rng::stream(traj_seed, i);
            let mut state = State::uniform(g, &mut r);
            let mut profile = PhiProfile::new(&ln_grid);
            let reason = run_observed(&mut state, g, p, &rule, &mut r, |s, ev| {
                let moved = ev.is_none_or(|e| e.new_belief != e.old_belief);
                if moved && classify_total(s.total(), &stopping) == Classification::Continue {
                    profile.observe(s.beliefs(), g, p);
                }
            })?;
            Ok((profile, reason == crate::dynamics::StopReason::EventBudget))
        })
        .collect::<Result<_>>()?;
    let mut censored = 0;
    let mut traj_profile = PhiProfile::new(&ln_grid);
    for (prof, was_censored) in traj_results {
        censored += u64::from(was_censored);
        traj_profile = traj_profile.merge(prof);
    }

    let random_seed = rng::sub_seed(seed, 1);
    let random_profile = (0..spec.random_states)
        .into_par_iter()
        .map(|i| -> Result<PhiProfile> {
            let mut r = rng::stream(random_seed, i);
            let beliefs = sample_pre_exit(n, &stopping, &mut r)?;
            let mut profile = PhiProfile::new(&ln_grid);
            profile.observe(&beliefs, g, p);
            Ok(profile)
        })
        .try_reduce(|| PhiProfile::new(&ln_grid), |a, b| Ok(a.merge(b)))?;

    let mut extreme_profile = PhiProfile::new(&ln_grid);
    for beliefs in extreme_states(g, epsilon, &stopping) {
        extreme_profile.observe(&beliefs, g, p);
    }

    let trajectory_states = traj_profile.states;
    let random_states = random_profile.states;
    let extreme_count = extreme_profile.states;
    let all = traj_profile.merge(random_profile).merge(extreme_profile);

    let mut points = Vec::with_capacity(grid.len());
    for (&c, &max_phi) in grid.iter().zip(&all.max_phi) {
        points.push(GridPoint { c, max_phi, mgf_bound_margin: mgf_bound_margin(c, epsilon)? });
    }
    let chosen = points
        .iter()
        .find(|pt| pt.max_phi <= 0.0 && pt.mgf_bound_margin > 0.0)
        .cloned()
        .ok_or(Error::NoCertifiableC { tried: points.len() })?;

    Ok(CertifiedC {
        c: chosen.c,
        epsilon,
        mu_plus: p.mu_plus,
        mu_minus: p.mu_minus,
        graph: format!("graph(n={},m={})", n, g.n_edges()),
        n_vertices: n,
        n_edges: g.n_edges(),
        seed,
        trajectories: spec.trajectories,
        trajectory_states,
        censored_trajectories: censored,
        random_states,
        extreme_states: extreme_count,
        max_phi: chosen.max_phi,
        mgf_bound_margin: chosen.mgf_bound_margin,
        grid: points,
    })
}

/// Uniform configuration conditioned on `-εN <= X <= (1-ε)N`, by rejection.
fn sample_pre_exit<R: Rng + ?Sized>(n: usize, spec: &StoppingSpec, r: &mut R) -> Result<Vec<f64>> {
    const MAX_TRIES: u32 = 100_000;
    for _ in 0..MAX_TRIES {
        let beliefs: Vec<f64> = (0..n).map(|_| 2.0 * r.gen::<f64>() - 1.0).collect();
        let total: f64 = beliefs.iter().sum();
        if classify_total(total, spec) == Classification::Continue {
            return Ok(beliefs);
        }
    }
    Err(Error::InvalidInput("could not sample a configuration before the stopping time".into()))
}

/// Witness edge `(0, lowest neighbor)` at every combination of `{-ε, 1-ε}`,
/// the other vertices split between `+1` and `-1` in index order, keeping
/// only configurations before the stopping time.
fn extreme_states(g: &Graph, epsilon: f64, spec: &StoppingSpec) -> Vec<Vec<f64>> {
    let n = g.n_vertices();
    let (u, v) = (0, g.neighbors(0)[0]);
    let others: Vec<usize> = (0..n).filter(|&x| x != u && x != v).collect();
    let levels = [-epsilon, 1.0 - epsilon];
    let mut out = Vec::new();
    for &a in &levels {
        for &b in &levels {
            for plus in 0..=others.len() {
                let mut beliefs = vec![-1.0; n];
                beliefs[u] = a;
                beliefs[v] = b;
                for &x in &others[..plus] {
                    beliefs[x] = 1.0;
                }
                let total: f64 = beliefs.iter().sum();
                if classify_total(total, spec) == Classification::Continue {
                    out.push(beliefs);
                }
            }
        }
    }
    out
}

//! Exit-probability estimation and the decay sweep over population sizes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Classification, StoppingSpec};
use crate::dynamics::{run, Params, State, StopReason, StopRule};
use crate::error::{Error, Result};
use crate::format::g12;
use crate::functionals::{certify_c_epsilon, mgf_uniform, CertificationSpec, CertifiedC};
use crate::graph::{generate, GraphSpec};
use crate::{graph::Graph, rng};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Binomial proportion with its 95% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub successes: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

impl Estimate {
    pub fn new(successes: u64, trials: u64, seed: u64) -> Result<Estimate> {
        let (ci_low, ci_high) = wilson_interval(successes, trials)?;
        Ok(Estimate { successes, trials, p_hat: successes as f64 / trials as f64, ci_low, ci_high, seed })
    }

    /// Upper end used against an upper bound: rule of three when nothing
    /// was observed, the Wilson upper limit otherwise.
    pub fn conservative_upper(&self) -> f64 {
        if self.successes == 0 {
            3.0 / self.trials as f64
        } else {
            self.ci_high
        }
    }
}

pub fn wilson_interval(successes: u64, trials: u64) -> Result<(f64, f64)> {
    if trials == 0 || successes > trials {
        return Err(Error::InvalidInput(format!("{successes} successes in {trials} trials")));
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Ok(((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0)))
}

/// Outcome counts of an exit-probability run. `estimate.successes` counts
/// exits through the lower threshold; `estimate.trials` counts every
/// replicate, censored ones included.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitEstimate {
    pub estimate: Estimate,
    pub hits_minus: u64,
    pub hits_plus: u64,
    pub censored: u64,
    pub total_events: u64,
    /// `X_0` of every replicate, in replicate order.
    pub initial_totals: Vec<f64>,
}

impl ExitEstimate {
    /// Sample mean and standard error of `c^{-X_0}` over the replicates.
    pub fn initial_mgf(&self, c: f64) -> (f64, f64) {
        let vals: Vec<f64> = self.initial_totals.iter().map(|&x| c.powf(-x)).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (mean, (var / n).sqrt())
    }
}

struct Replicate {
    exit: Classification,
    censored: bool,
    events: u64,
    initial_total: f64,
}

/// Runs `replicates` independent trajectories from uniform initial beliefs
/// until a threshold is crossed or the event budget runs out. Replicate `i`
/// uses stream `i` of `seed`, so counts do not depend on thread count.
pub fn estimate_exit_prob(
    g: &Graph,
    p: &Params,
    spec: &StoppingSpec,
    replicates: u64,
    event_budget: u64,
    seed: u64,
) -> Result<ExitEstimate> {
    if replicates == 0 {
        return Err(Error::InvalidInput("replicates must be at least 1".into()));
    }
    p.validate()?;
    spec.check_n(g.n_vertices())?;
    let rule = StopRule::max_events(event_budget).with_thresholds(*spec);
    let results: Vec<Replicate> = (0..replicates)
        .into_par_iter()
        .map(|i| -> Result<Replicate> {
            let mut r = rng::stream(seed, i);
            let mut state = State::uniform(g, &mut r);
            let initial_total = state.total();
            let out = run(&mut state, g, p, &rule, &mut r, None)?;
            let (exit, censored) = match out.reason {
                StopReason::Threshold(c) => (c, false),
                _ => (Classification::Continue, true),
            };
            Ok(Replicate { exit, censored, events: out.events, initial_total })
        })
        .collect::<Result<_>>()?;

    let hits_minus = results.iter().filter(|r| r.exit == Classification::HitMinus).count() as u64;
    let hits_plus = results.iter().filter(|r| r.exit == Classification::HitPlus).count() as u64;
    let censored = results.iter().filter(|r| r.censored).count() as u64;
    debug_assert_eq!(hits_minus + hits_plus + censored, replicates);
    if censored == replicates {
        return Err(Error::AllCensored { trials: replicates });
    }
    Ok(ExitEstimate {
        estimate: Estimate::new(hits_minus, replicates, seed)?,
        hits_minus,
        hits_plus,
        censored,
        total_events: results.iter().map(|r| r.events).sum(),
        initial_totals: results.iter().map(|r| r.initial_total).collect(),
    })
}

/// Inputs of [`decay_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Graph family; its size parameter is replaced by each entry of `ns`.
    pub family: GraphSpec,
    pub ns: Vec<usize>,
    pub params: Params,
    pub epsilon: f64,
    pub replicates: u64,
    pub event_budget: u64,
    pub certification: CertificationSpec,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub epsilon: f64,
    pub params: Params,
    pub replicates: u64,
    pub hits_minus: u64,
    pub hits_plus: u64,
    pub censored: u64,
    pub estimate: Estimate,
    pub certificate: CertifiedC,
    /// `c_ε^{-εN/2}`.
    pub bound: f64,
    /// Upper confidence value compared against `bound`.
    pub upper: f64,
    /// The row had no lower exits and `upper` is the rule of three.
    pub zero_hits: bool,
    pub bound_ok: bool,
    /// Sample mean and standard error of `c_ε^{-X_0}`, and `g(c_ε)^N`.
    pub mgf_mean: f64,
    pub mgf_stderr: f64,
    pub mgf_closed_form: f64,
}

impl SweepRow {
    pub fn c_eps(&self) -> f64 {
        self.certificate.c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `ln(max(p̂, 1/(replicates+1)))` against `N`.
    pub log_slope: f64,
    /// Each `p̂` is at most the previous row's upper Wilson limit.
    pub monotone_ok: bool,
}

impl SweepReport {
    pub fn all_bounds_ok(&self) -> bool {
        self.rows.iter().all(|r| r.bound_ok)
    }
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// For each population size: build the graph, certify `c_ε`, estimate the
/// lower-exit probability and compare its upper confidence limit with
/// `c_ε^{-εN/2}`.
///
/// Sub-seeds per size `N`: graph `sub_seed(s, 0)`, certification
/// `sub_seed(s, 1)`, replicates `sub_seed(s, 2)`, where `s = sub_seed(seed, N)`.
pub fn decay_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.params.validate()?;
    if !cfg.params.is_optimist() {
        return Err(Error::DegenerateDrift { mu_plus: cfg.params.mu_plus, mu_minus: cfg.params.mu_minus });
    }
    if cfg.ns.is_empty() || cfg.ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("population sizes must be non-empty and strictly ascending".into()));
    }
    let mut rows = Vec::with_capacity(cfg.ns.len());
    for &n in &cfg.ns {
        let size_seed = rng::sub_seed(cfg.seed, n as u64);
        let spec = cfg.family.with_size(n)?;
        let g = generate(&spec, rng::sub_seed(size_seed, 0))?;
        let mut certificate =
            certify_c_epsilon(&g, &cfg.params, cfg.epsilon, &cfg.certification, rng::sub_seed(size_seed, 1))?;
        certificate.graph = spec.to_string();
        let stopping = StoppingSpec::new(cfg.epsilon, n)?;
        let rep_seed = rng::sub_seed(size_seed, 2);
        let est = estimate_exit_prob(&g, &cfg.params, &stopping, cfg.replicates, cfg.event_budget, rep_seed)?;
        let c = certificate.c;
        let bound = c.powf(-cfg.epsilon * n as f64 / 2.0);
        let upper = est.estimate.conservative_upper();
        let (mgf_mean, mgf_stderr) = est.initial_mgf(c);
        rows.push(SweepRow {
            n,
            epsilon: cfg.epsilon,
            params: cfg.params,
            replicates: cfg.replicates,
            hits_minus: est.hits_minus,
            hits_plus: est.hits_plus,
            censored: est.censored,
            estimate: est.estimate,
            bound,
            upper,
            zero_hits: est.hits_minus == 0,
            bound_ok: upper <= bound,
            mgf_mean,
            mgf_stderr,
            mgf_closed_form: mgf_uniform(c)?.powi(n as i32),
            certificate,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows
        .iter()
        .map(|r| r.estimate.p_hat.max(1.0 / (r.replicates as f64 + 1.0)).ln())
        .collect();
    let monotone_ok = rows.windows(2).all(|w| w[1].estimate.p_hat <= w[0].estimate.ci_high);
    Ok(SweepReport { log_slope: least_squares_slope(&xs, &ys), monotone_ok, rows })
}

pub const SWEEP_CSV_HEADER: &str =
    "N,eps,mu_plus,mu_minus,replicates,hits_minus,hits_plus,censored,p_hat,ci_low,ci_high,c_eps,bound";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let fields = [
            r.n.to_string(),
            g12(r.epsilon),
            g12(r.params.mu_plus),
            g12(r.params.mu_minus),
            r.replicates.to_string(),
            r.hits_minus.to_string(),
            r.hits_plus.to_string(),
            r.censored.to_string(),
            g12(r.estimate.p_hat),
            g12(r.estimate.ci_low),
            g12(r.estimate.ci_high),
            g12(r.c_eps()),
            g12(r.bound),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

//! Invariant battery behind `kindsim verify`.

use kindsim::dynamics::{run, run_observed, State, StopRule};
use kindsim::experiments::{
    classify, estimate_exit_prob, one_step_oracle, Classification, StoppingSpec,
};
use kindsim::functionals::{
    big_phi, certify_c_epsilon, generator_drift_x, mgf_bound_interval, mgf_uniform, pair_drift, phi,
    rho, witness_pair, CertificationSpec,
};
use kindsim::graph::{generate, parse_edge_list, GraphSpec};
use kindsim::{rng, Graph, Params};
use rand::Rng;
use serde_json::Map;

use crate::commands::Failure;
use crate::config::RunConfig;
use crate::Fault;

type Check = Result<String, String>;
type NamedCheck<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

/// `rho` as seen by the battery, possibly with an injected defect.
struct Drift {
    p: Params,
    fault: Option<Fault>,
}

impl Drift {
    fn rho(&self, x: f64, y: f64) -> f64 {
        let r = rho(x, y, &self.p).expect("beliefs in range");
        match self.fault {
            Some(Fault::RhoSign) => -r,
            None => r,
        }
    }
}

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_beliefs<R: Rng>(r: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(-1.0..=1.0)).collect()
}

fn graphs_are_well_formed(seed: u64) -> Check {
    let cases = [
        (GraphSpec::Complete { n: 6 }, Some(15)),
        (GraphSpec::Cycle { n: 7 }, Some(7)),
        (GraphSpec::Grid { w: 3, h: 4 }, Some(17)),
        (GraphSpec::ErdosRenyi { n: 30, p: 0.15 }, None),
    ];
    for (spec, edges) in cases {
        let g = generate(&spec, seed).map_err(|e| format!("{spec}: {e}"))?;
        if !g.is_connected() || edges.is_some_and(|m| m != g.n_edges()) {
            return Err(format!("{spec}: {} edges, connected = {}", g.n_edges(), g.is_connected()));
        }
        if g.n_oriented_edges() != 2 * g.n_edges() {
            return Err(format!("{spec}: oriented edge count"));
        }
        let back = parse_edge_list(&g.to_edge_list()).map_err(|e| format!("{spec}: {e}"))?;
        if back != g {
            return Err(format!("{spec}: edge-list round trip differs"));
        }
    }
    let a = generate(&GraphSpec::ErdosRenyi { n: 30, p: 0.15 }, seed).unwrap();
    let b = generate(&GraphSpec::ErdosRenyi { n: 30, p: 0.15 }, seed).unwrap();
    ensure(a == b, "4 families connected, round trip exact, generation deterministic".into())
}

fn beliefs_stay_in_range(g: &Graph, p: &Params, seed: u64) -> Check {
    let mut r = rng::stream(seed, 10);
    let mut s = State::uniform(g, &mut r);
    let jump = 2.0 * p.mu_plus.max(p.mu_minus);
    let mut worst = 0.0f64;
    let mut last_t = 0.0;
    let mut bad = None;
    run_observed(&mut s, g, p, &StopRule::max_events(20_000), &mut r, |st, ev| {
        if let Some(ev) = ev {
            worst = worst.max((ev.new_belief - ev.old_belief).abs());
            if !(-1.0..=1.0).contains(&ev.new_belief) || st.clock() < last_t || ev.dt < 0.0 {
                bad.get_or_insert(st.event_count());
            }
            last_t = st.clock();
        }
    })
    .map_err(|e| e.to_string())?;
    if let Some(k) = bad {
        return Err(format!("range or clock violated at event {k}"));
    }
    ensure(
        worst <= jump + 1e-12,
        format!("20000 events, largest jump {worst:.4} <= {jump:.4}"),
    )
}

fn extremes_are_absorbing(g: &Graph, p: &Params, seed: u64) -> Check {
    for v in [1.0, -1.0] {
        let mut s = State::constant(g, v).unwrap();
        let mut r = rng::stream(seed, 11);
        run(&mut s, g, p, &StopRule::max_events(5_000), &mut r, None).map_err(|e| e.to_string())?;
        if s.beliefs().iter().any(|&b| b != v) {
            return Err(format!("all-{v} configuration moved"));
        }
    }
    Ok("all +1 and all -1 unchanged over 5000 events".into())
}

fn runs_are_deterministic(g: &Graph, p: &Params, seed: u64) -> Check {
    let go = || {
        let mut r = rng::stream(seed, 12);
        let mut s = State::uniform(g, &mut r);
        let out = run(&mut s, g, p, &StopRule::max_events(5_000), &mut r, Some(1)).unwrap();
        (out, s)
    };
    let ((a, sa), (b, sb)) = (go(), go());
    let fresh: f64 = sa.beliefs().iter().sum();
    if (sa.total() - fresh).abs() > 1e-9 {
        return Err(format!("cached total {} vs fresh sum {fresh}", sa.total()));
    }
    ensure(a == b && sa == sb, "two runs from one stream agree bit for bit; cached total coherent".into())
}

fn pair_drift_identity(d: &Drift, seed: u64) -> Check {
    let mut r = rng::stream(seed, 13);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let (x, y) = (r.gen_range(-1.0..=1.0), r.gen_range(-1.0..=1.0));
        let err = (d.rho(x, y) + d.rho(y, x) - pair_drift(x, y, &d.p).unwrap()).abs();
        worst = worst.max(err);
    }
    ensure(worst < 1e-12, format!("max |rho(x,y) + rho(y,x) - pair drift| = {worst:.3e} over 10000 pairs"))
}

fn generator_matches_edge_sum(d: &Drift, g: &Graph, seed: u64) -> Check {
    let mut r = rng::stream(seed, 14);
    let s = State::from_beliefs(random_beliefs(&mut r, g.n_vertices())).unwrap();
    let b = s.beliefs();
    let by_rho: f64 = g.oriented_edges().iter().map(|&(x, y)| d.rho(b[x as usize], b[y as usize])).sum();
    let closed = generator_drift_x(&s, g, &d.p).unwrap();
    ensure(
        (by_rho - closed).abs() < 1e-9,
        format!("sum of rho over oriented edges {by_rho:.6} vs closed form {closed:.6}"),
    )
}

fn pair_drift_sign(p: &Params) -> Check {
    let grid: Vec<f64> = (0..=40).map(|k| -1.0 + k as f64 / 20.0).collect();
    let sign = (p.mu_plus - p.mu_minus).signum();
    for &x in &grid {
        for &y in &grid {
            let v = pair_drift(x, y, p).unwrap();
            if v * sign < -1e-15 {
                return Err(format!("pair drift {v} at ({x}, {y}) has the wrong sign"));
            }
        }
    }
    Ok("pair drift has the sign of mu_plus - mu_minus on a 41x41 grid".into())
}

fn phi_linearizes_to_rho(d: &Drift, seed: u64) -> Check {
    let mut r = rng::stream(seed, 15);
    let h: f64 = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (x, y) = (r.gen_range(-1.0..=1.0), r.gen_range(-1.0..=1.0));
        if phi(x, y, 1.0, &d.p).unwrap() != 0.0 {
            return Err("phi(x, y, 1) != 0".into());
        }
        // d phi / d ln c at c = 1 is -rho
        let slope = phi(x, y, (h).exp(), &d.p).unwrap() / h;
        worst = worst.max((slope + d.rho(x, y)).abs());
    }
    ensure(worst < 1e-5, format!("max |d phi/d ln c + rho| at c = 1: {worst:.2e}"))
}

fn mgf_numerics(seed: u64) -> Check {
    let near = mgf_uniform(1.0 + 1e-12).unwrap();
    if (near - 1.0).abs() > 1e-12 {
        return Err(format!("g(1+) = {near}"));
    }
    let mut r = rng::stream(seed, 16);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let c: f64 = r.gen_range(1.0005..20.0);
        let l = c.ln();
        worst = worst.max(((mgf_uniform(c).unwrap() - l.sinh() / l) / (l.sinh() / l)).abs());
    }
    let below = mgf_uniform(1.0 + 0.99e-4).unwrap();
    let above = mgf_uniform(1.0 + 1.01e-4).unwrap();
    ensure(
        worst < 1e-12 && (above - below).abs() < 1e-9,
        format!("g(1+) = 1, max relative gap to sinh(l)/l {worst:.1e}, continuous at the series cutoff"),
    )
}

fn mgf_bound_intervals(epsilon: f64) -> Check {
    let mut eps_list = vec![0.1, 0.25, 0.45];
    if !eps_list.contains(&epsilon) {
        eps_list.push(epsilon);
    }
    let mut parts = Vec::new();
    for eps in eps_list {
        match mgf_bound_interval(eps, 1e-3, 10.0).map_err(|e| e.to_string())? {
            Some(c) => parts.push(format!("eps {eps}: c* = {c:.3}")),
            None => return Err(format!("no c > 1 satisfies 1/2 < g(c) < c^(eps/2) for eps = {eps}")),
        }
    }
    Ok(parts.join(", "))
}

fn oracle_agrees(p: &Params, seed: u64) -> Check {
    let mut worst = 0.0f64;
    for k in 0..5 {
        let g = generate(&GraphSpec::ErdosRenyi { n: 8, p: 0.5 }, seed.wrapping_add(k)).unwrap();
        let mut r = rng::stream(seed, 17 + k);
        let s = State::uniform(&g, &mut r);
        let c = r.gen_range(1.01..1.6);
        let d = one_step_oracle(&s, &g, p, c).map_err(|e| e.to_string())?;
        let x: f64 = s.beliefs().iter().sum();
        worst = worst
            .max((d.drift_x - generator_drift_x(&s, &g, p).unwrap()).abs())
            .max((d.drift_cx - c.powf(-x) * big_phi(&s, &g, c, p).unwrap()).abs());
    }
    ensure(worst < 1e-10, format!("enumeration vs closed forms on 5 random graphs: {worst:.2e}"))
}

fn witnesses_cross(g: &Graph, epsilon: f64, seed: u64) -> Check {
    let mut r = rng::stream(seed, 30);
    let spec = StoppingSpec::new(epsilon, g.n_vertices()).unwrap();
    let mut checked = 0;
    while checked < 2000 {
        let s = State::uniform(g, &mut r);
        if classify(&s, &spec).unwrap() != Classification::Continue {
            continue;
        }
        let (x, y) = witness_pair(&s, g, epsilon).map_err(|e| e.to_string())?;
        let b = s.beliefs();
        if !g.neighbors(x).contains(&y) || b[x] * b[y] > 1.0 - epsilon {
            return Err(format!("bad witness ({x}, {y}) with product {}", b[x] * b[y]));
        }
        checked += 1;
    }
    Ok("2000 pre-exit states: witness edge with product <= 1 - eps".into())
}

/// Dyadic ε and N make every boundary total exactly representable.
fn thresholds_are_strict() -> Check {
    for (epsilon, n) in [(0.25, 4usize), (0.375, 8), (0.125, 16)] {
        let spec = StoppingSpec::new(epsilon, n).unwrap();
        for (total, want) in [
            (spec.lower, Classification::Continue),
            (spec.upper, Classification::Continue),
            (spec.lower - 1e-9, Classification::HitMinus),
            (spec.upper + 1e-9, Classification::HitPlus),
        ] {
            let s = State::from_beliefs(vec![total / n as f64; n]).unwrap();
            let got = classify(&s, &spec).unwrap();
            if got != want {
                return Err(format!("N = {n}, X = {total}: {got:?}, expected {want:?}"));
            }
        }
    }
    Ok("totals on a threshold continue, beyond it stop".into())
}

fn certified_c_holds(p: &Params, epsilon: f64, seed: u64) -> Check {
    let g = generate(&GraphSpec::Complete { n: 10 }, 0).unwrap();
    let spec = CertificationSpec { trajectories: 20, random_states: 1000, ..Default::default() };
    let cert = certify_c_epsilon(&g, p, epsilon, &spec, seed).map_err(|e| e.to_string())?;
    let stop = StoppingSpec::new(epsilon, 10).unwrap();
    let rule = StopRule::max_events(1_000_000).with_thresholds(stop);
    let (mut states, mut violations) = (0u64, 0u64);
    for i in 0..10 {
        let mut r = rng::stream(seed ^ 0x5eed, i);
        let mut s = State::uniform(&g, &mut r);
        run_observed(&mut s, &g, p, &rule, &mut r, |st, _| {
            if classify(st, &stop).unwrap() == Classification::Continue {
                states += 1;
                if big_phi(st, &g, cert.c, p).unwrap() > 0.0 {
                    violations += 1;
                }
            }
        })
        .map_err(|e| e.to_string())?;
    }
    ensure(
        violations == 0,
        format!("c = {:.4} on complete(10): {violations} of {states} fresh pre-exit states with Phi > 0", cert.c),
    )
}

fn estimates_ignore_thread_count(p: &Params, epsilon: f64, seed: u64) -> Check {
    let g = generate(&GraphSpec::Complete { n: 8 }, 0).unwrap();
    let spec = StoppingSpec::new(epsilon, 8).unwrap();
    let with = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| estimate_exit_prob(&g, p, &spec, 300, 1_000_000, seed))
    };
    let (a, b) = (with(1).map_err(|e| e.to_string())?, with(3).map_err(|e| e.to_string())?);
    ensure(a == b, format!("300 replicates, 1 vs 3 threads: p_hat {} both times", a.estimate.p_hat))
}

fn config_round_trips(cfg: &RunConfig) -> Check {
    let text = serde_json::to_string(cfg).map_err(|e| e.to_string())?;
    let back = RunConfig::from_parts(Some(&text), Map::new()).map_err(|e| e.to_string())?;
    ensure(&back == cfg, "parse(serialize(config)) == config".into())
}

/// Runs every check, prints one line each, and fails if any failed.
pub fn verify(cfg: &RunConfig, fault: Option<Fault>) -> Result<(), Failure> {
    // verify has no model of its own to study; fall back to a standard
    // optimist pair when the config leaves the parameters out
    let p = match (cfg.mu_plus, cfg.mu_minus) {
        (None, None) => Params::new(0.5, 0.2).unwrap(),
        _ => cfg.params()?,
    };
    let optimist = if p.is_optimist() { p } else { Params::new(0.5, 0.2).unwrap() };
    let seed = cfg.seed;
    let eps = cfg.epsilon;
    let d = Drift { p, fault };
    let er = generate(&GraphSpec::ErdosRenyi { n: 20, p: 0.2 }, seed).map_err(|e| Failure::Runtime(e.to_string()))?;

    let checks: Vec<NamedCheck> = vec![
        ("graph families well formed", Box::new(|| graphs_are_well_formed(seed))),
        ("beliefs stay in [-1, 1]", Box::new(|| beliefs_stay_in_range(&er, &p, seed))),
        ("consensus states absorbing", Box::new(|| extremes_are_absorbing(&er, &p, seed))),
        ("runs deterministic per stream", Box::new(|| runs_are_deterministic(&er, &p, seed))),
        ("pair drift identity", Box::new(|| pair_drift_identity(&d, seed))),
        ("generator drift equals edge sum", Box::new(|| generator_matches_edge_sum(&d, &er, seed))),
        ("pair drift sign", Box::new(|| pair_drift_sign(&p))),
        ("phi linearizes to -rho", Box::new(|| phi_linearizes_to_rho(&d, seed))),
        ("uniform mgf numerics", Box::new(|| mgf_numerics(seed))),
        ("mgf bound interval nonempty", Box::new(|| mgf_bound_intervals(eps))),
        ("one-step oracle agreement", Box::new(|| oracle_agrees(&p, seed))),
        ("witness edges cross", Box::new(|| witnesses_cross(&er, eps, seed))),
        ("strict thresholds", Box::new(thresholds_are_strict)),
        ("certified c supermartingale", Box::new(|| certified_c_holds(&optimist, eps, seed))),
        ("thread count invariance", Box::new(|| estimates_ignore_thread_count(&p, eps, seed))),
        ("config round trip", Box::new(|| config_round_trips(cfg))),
    ];
    let mut failed = 0;
    for (name, check) in &checks {
        match check() {
            Ok(detail) => println!("PASS  {name} -- {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name} -- {detail}");
            }
        }
    }
    println!("{} of {} invariants hold", checks.len() - failed, checks.len());
    if failed > 0 {
        return Err(Failure::Runtime(format!("{failed} invariant(s) failed")));
    }
    Ok(())
}

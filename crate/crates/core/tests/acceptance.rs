//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::{Duration, Instant};

use kindsim::dynamics::{run_observed, Params, State, StopRule};
use kindsim::experiments::{
    classify, decay_sweep, fixation_experiment, one_step_oracle, sweep_csv, wilson_interval, Classification,
    FixationConfig, FixationReport, InitSpec, StoppingSpec, SweepConfig, SweepReport,
};
use kindsim::functionals::{
    big_phi, certify_c_epsilon, generator_drift_x, mgf_bound_interval, mgf_uniform, pair_drift, rho,
    CertificationSpec, CertifiedC,
};
use kindsim::graph::{generate, Graph, GraphSpec};
use kindsim::rng;
use rand::Rng;

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn graph(spec: GraphSpec) -> Graph {
    generate(&spec, 0).expect("deterministic family")
}

fn optimist() -> Params {
    Params::new(0.5, 0.2).unwrap()
}

/// 1. |ρ(x,y)+ρ(y,x) − (μ₊−μ₋)(1−xy)| ≤ 1e−12 on 1e5 random inputs, < 1 s.
fn exact_algebra() -> Outcome {
    let start = Instant::now();
    let mut r = rng::stream(SEED, 1);
    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        let (x, y) = (2.0 * r.gen::<f64>() - 1.0, 2.0 * r.gen::<f64>() - 1.0);
        let p = Params::new(r.gen(), r.gen()).unwrap();
        let lhs = rho(x, y, &p).unwrap() + rho(y, x, &p).unwrap();
        let rhs = (p.mu_plus - p.mu_minus) * (1.0 - x * y);
        worst = worst.max((lhs - rhs).abs());
        worst = worst.max((pair_drift(x, y, &p).unwrap() - rhs).abs());
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-12 && elapsed < Duration::from_secs(1),
        format!("max |error| {worst:.2e}, {:.3} s", elapsed.as_secs_f64()),
    )
}

/// 2. Enumeration oracle vs closed forms within 1e−10, 100 states × 4 graphs
///    × 5 parameter sets × 3 values of c, < 10 s.
fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let graphs = [
        graph(GraphSpec::Complete { n: 2 }),
        graph(GraphSpec::Complete { n: 5 }),
        graph(GraphSpec::Cycle { n: 6 }),
        graph(GraphSpec::Grid { w: 3, h: 3 }),
    ];
    let mut pr = rng::stream(SEED, 2);
    let param_sets: Vec<Params> = (0..5).map(|_| Params::new(pr.gen(), pr.gen()).unwrap()).collect();
    let mut worst_x = 0.0f64;
    let mut worst_cx = 0.0f64;
    let mut checks = 0;
    for (gi, g) in graphs.iter().enumerate() {
        for (pi, p) in param_sets.iter().enumerate() {
            let mut r = rng::stream(SEED, 1000 + (gi * 10 + pi) as u64);
            for _ in 0..100 {
                let s = State::uniform(g, &mut r);
                let x: f64 = s.beliefs().iter().sum();
                for c in [1.05, 1.2, 2.0] {
                    let oracle = one_step_oracle(&s, g, p, c).unwrap();
                    let closed_x = generator_drift_x(&s, g, p).unwrap();
                    let closed_cx = c.powf(-x) * big_phi(&s, g, c, p).unwrap();
                    worst_x = worst_x.max((oracle.drift_x - closed_x).abs());
                    worst_cx = worst_cx.max((oracle.drift_cx - closed_cx).abs());
                    checks += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        worst_x <= 1e-10 && worst_cx <= 1e-10 && elapsed < Duration::from_secs(10),
        format!(
            "{checks} comparisons, max |Δ drift_X| {worst_x:.2e}, max |Δ drift_cX| {worst_cx:.2e}, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

/// 3. Submartingale sign on random states; supermartingale sign of Φ at the
///    certified c along 100 fresh stopped trajectories on K₁₀, < 1 min.
fn martingale_signs() -> (Outcome, CertifiedC) {
    let start = Instant::now();
    let graphs = [
        graph(GraphSpec::Complete { n: 10 }),
        graph(GraphSpec::Cycle { n: 12 }),
        graph(GraphSpec::Grid { w: 4, h: 4 }),
        generate(&GraphSpec::ErdosRenyi { n: 15, p: 0.3 }, 5).unwrap(),
    ];
    let mut r = rng::stream(SEED, 3);
    let mut min_drift = f64::INFINITY;
    for g in &graphs {
        for _ in 0..2_500 {
            let a: f64 = r.gen();
            let b: f64 = r.gen();
            let p = Params::new(a.max(b), a.min(b)).unwrap();
            // half uniform states, half pushed toward the extremes
            let s = if r.gen::<bool>() {
                State::uniform(g, &mut r)
            } else {
                let beliefs = (0..g.n_vertices())
                    .map(|_| if r.gen::<bool>() { 1.0 } else { -1.0 } * (1.0 - 1e-3 * r.gen::<f64>()))
                    .collect();
                State::from_beliefs(beliefs).unwrap()
            };
            min_drift = min_drift.min(generator_drift_x(&s, g, &p).unwrap());
        }
    }

    let k10 = graph(GraphSpec::Complete { n: 10 });
    let p = optimist();
    let cert = certify_c_epsilon(&k10, &p, 0.3, &CertificationSpec::default(), SEED).unwrap();
    let c = cert.c;
    let spec = StoppingSpec::new(0.3, 10).unwrap();
    let rule = StopRule::max_events(10_000_000).with_thresholds(spec);
    let fresh_seed = rng::sub_seed(SEED, 33);
    let mut states = 0u64;
    let mut violations = 0u64;
    let mut max_phi = f64::NEG_INFINITY;
    for i in 0..100 {
        let mut tr = rng::stream(fresh_seed, i);
        let mut s = State::uniform(&k10, &mut tr);
        run_observed(&mut s, &k10, &p, &rule, &mut tr, |st, _| {
            if classify(st, &spec).unwrap() != Classification::Continue {
                return;
            }
            let phi = big_phi(st, &k10, c, &p).unwrap();
            let scaled = c.powf(-st.total()) * phi;
            max_phi = max_phi.max(phi);
            states += 1;
            if phi > 1e-12 || scaled > 1e-12 {
                violations += 1;
            }
        })
        .unwrap();
    }
    let elapsed = start.elapsed();
    (
        check(
            min_drift >= -1e-12 && violations == 0 && elapsed < Duration::from_secs(60),
            format!(
                "min drift_X {min_drift:.3e}; certified c = {c:.6} (max Φ on ensemble {:.3e}); \
                 {states} fresh pre-exit states, max Φ {max_phi:.3e}, {violations} violations; {:.1} s",
                cert.max_phi,
                elapsed.as_secs_f64()
            ),
        ),
        cert,
    )
}

/// 4. sinh-form equivalence, g(1⁺) = 1, nonempty MGF-bound intervals, < 1 s.
fn mgf_bound_numerics() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for k in 1..=10_000 {
        let c = k as f64 * 1e-3;
        if k == 1000 {
            continue;
        }
        let l = c.ln();
        worst = worst.max((mgf_uniform(c).unwrap() - l.sinh() / l).abs());
    }
    let near_one = [1e-15, 1e-12, 1e-9, 1e-6]
        .iter()
        .map(|h| (mgf_uniform(1.0 + h).unwrap() - 1.0).abs())
        .fold(0.0, f64::max);
    let mut intervals = Vec::new();
    for eps in [0.1, 0.3, 0.45] {
        intervals.push((eps, mgf_bound_interval(eps, 1e-3, 10.0).unwrap()));
    }
    let elapsed = start.elapsed();
    let all_found = intervals.iter().all(|(_, c)| c.is_some());
    let desc: Vec<String> = intervals
        .iter()
        .map(|(e, c)| format!("ε={e}: c*={}", c.map_or("none".into(), |c| format!("{c:.3}"))))
        .collect();
    check(
        worst <= 1e-12 && near_one <= 1e-9 && all_found && elapsed < Duration::from_secs(1),
        format!(
            "sinh-form max |Δ| {worst:.2e}; |g(1⁺)−1| ≤ {near_one:.2e}; {}; {:.3} s",
            desc.join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

/// 5. Monte Carlo E[c^{−X₀}] on N = 50 vs g(c)^N within 3 standard errors.
fn initial_mgf() -> Outcome {
    let start = Instant::now();
    let g = graph(GraphSpec::Cycle { n: 50 });
    let totals: Vec<f64> = (0..10_000u64)
        .map(|i| State::uniform(&g, &mut rng::stream(rng::sub_seed(SEED, 5), i)).total())
        .collect();
    let mut pass = true;
    let mut desc = Vec::new();
    for c in [1.05f64, 1.2] {
        let vals: Vec<f64> = totals.iter().map(|x| c.powf(-x)).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let se = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        let closed = mgf_uniform(c).unwrap().powi(50);
        let z = (mean - closed) / se;
        pass &= z.abs() <= 3.0;
        desc.push(format!("c={c}: mean {mean:.5} vs {closed:.5} ({z:+.2} SE)"));
    }
    let elapsed = start.elapsed();
    check(pass && elapsed < Duration::from_secs(10), format!("{}; {:.2} s", desc.join(", "), elapsed.as_secs_f64()))
}

fn sweep_config() -> SweepConfig {
    SweepConfig {
        family: GraphSpec::Complete { n: 10 },
        ns: vec![10, 20, 40],
        params: optimist(),
        epsilon: 0.3,
        replicates: 10_000,
        event_budget: 10_000_000,
        certification: CertificationSpec::default(),
        seed: SEED,
    }
}

/// 6. Upper CI of p̂ below c_ε^{−εN/2} for N ∈ {10, 20, 40}, p̂ non-increasing.
fn exit_bound() -> (Outcome, SweepReport) {
    let start = Instant::now();
    let report = decay_sweep(&sweep_config()).unwrap();
    let elapsed = start.elapsed();
    let rows: Vec<String> = report
        .rows
        .iter()
        .map(|r| {
            format!(
                "N={} p̂={:.2e} upper={:.2e}{} bound={:.3e} (c={:.4}) censored={}",
                r.n,
                r.estimate.p_hat,
                r.upper,
                if r.zero_hits { " (rule of 3)" } else { "" },
                r.bound,
                r.c_eps(),
                r.censored
            )
        })
        .collect();
    (
        check(
            report.all_bounds_ok() && report.monotone_ok,
            format!(
                "{}; monotone {}; ln p̂ slope {:.4}/vertex; {:.1} s",
                rows.join(" | "),
                report.monotone_ok,
                report.log_slope,
                elapsed.as_secs_f64()
            ),
        ),
        report,
    )
}

fn voter_config() -> FixationConfig {
    FixationConfig {
        params: Params::new(1.0, 1.0).unwrap(),
        init: InitSpec::Explicit { beliefs: vec![1.0, 1.0, 1.0, -1.0, -1.0] },
        replicates: 10_000,
        delta: 0.0,
        event_budget: 10_000_000,
        seed: rng::sub_seed(SEED, 7),
    }
}

/// 7. Voter case on K₅ from three `+1` vertices: plus fixation ≈ 3/5.
fn voter() -> (Outcome, FixationReport) {
    let start = Instant::now();
    let k5 = graph(GraphSpec::Complete { n: 5 });
    let rep = fixation_experiment(&k5, &voter_config()).unwrap();
    let elapsed = start.elapsed();
    let n = rep.replicates as f64;
    let half = 1.959_963_984_540_054 * (0.6 * 0.4 / n).sqrt();
    let f = rep.fraction_plus();
    (
        check(
            rep.censored == 0 && (f - 0.6).abs() <= half && elapsed < Duration::from_secs(60),
            format!(
                "plus fraction {f:.4} vs 3/5 ± {half:.4}, censored {}, mean events {:.1}; {:.2} s",
                rep.censored,
                rep.mean_events_to_absorption.unwrap_or(f64::NAN),
                elapsed.as_secs_f64()
            ),
        ),
        rep,
    )
}

/// 8. δ-absorption on C₁₀ and a 4×4 grid, plus side favoured.
fn convergence_proxy() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut desc = Vec::new();
    for (i, spec) in [GraphSpec::Cycle { n: 10 }, GraphSpec::Grid { w: 4, h: 4 }].into_iter().enumerate() {
        let g = graph(spec.clone());
        let cfg = FixationConfig {
            params: optimist(),
            init: InitSpec::Uniform,
            replicates: 1000,
            delta: 1e-6,
            event_budget: 10_000_000,
            seed: rng::sub_seed(SEED, 80 + i as u64),
        };
        let rep = fixation_experiment(&g, &cfg).unwrap();
        let absorbed = rep.absorbed();
        let (lo, _) = wilson_interval(rep.plus, absorbed.max(1)).unwrap();
        let ok = absorbed as f64 >= 0.99 * rep.replicates as f64 && lo > 0.5;
        pass &= ok;
        desc.push(format!(
            "{spec}: absorbed {absorbed}/{} (plus {}, minus {}), plus-share lower CI {lo:.3}",
            rep.replicates, rep.plus, rep.minus
        ));
    }
    let elapsed = start.elapsed();
    check(pass && elapsed < Duration::from_secs(600), format!("{}; {:.1} s", desc.join(" | "), elapsed.as_secs_f64()))
}

/// 9. Same master seed, different thread counts: identical bytes.
fn determinism(sweep: &SweepReport, voter_rep: &FixationReport, cert: &CertifiedC) -> Outcome {
    let start = Instant::now();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let multi = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let k5 = graph(GraphSpec::Complete { n: 5 });
    let k10 = graph(GraphSpec::Complete { n: 10 });

    let voter_1 = single.install(|| fixation_experiment(&k5, &voter_config()).unwrap()).csv();
    let voter_4 = multi.install(|| fixation_experiment(&k5, &voter_config()).unwrap()).csv();
    let cert_json = |pool: &rayon::ThreadPool| {
        pool.install(|| {
            serde_json::to_string_pretty(
                &certify_c_epsilon(&k10, &optimist(), 0.3, &CertificationSpec::default(), SEED).unwrap(),
            )
            .unwrap()
        })
    };
    let cert_1 = cert_json(&single);
    let cert_4 = cert_json(&multi);
    let cert_default = serde_json::to_string_pretty(cert).unwrap();
    let sweep_1 = sweep_csv(&single.install(|| decay_sweep(&sweep_config()).unwrap()).rows);
    let sweep_default = sweep_csv(&sweep.rows);

    let same_voter = voter_1 == voter_4 && voter_1 == voter_rep.csv();
    let same_cert = cert_1 == cert_4 && cert_1 == cert_default;
    let same_sweep = sweep_1 == sweep_default;
    check(
        same_voter && same_cert && same_sweep,
        format!(
            "fixation CSV {same_voter}, certificate JSON {same_cert}, sweep CSV {same_sweep} \
             (1 vs 4 vs default threads); {:.1} s",
            start.elapsed().as_secs_f64()
        ),
    )
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |n: u32, name: &'static str, o: Outcome| {
        println!("criterion {n} [{name}]: {} -- {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o));
    };
    report(1, "pair-drift identity", exact_algebra());
    report(2, "oracle equivalence", oracle_equivalence());
    let (o, cert) = martingale_signs();
    report(3, "martingale signs", o);
    report(4, "moment generating function numerics", mgf_bound_numerics());
    report(5, "initial MGF", initial_mgf());
    let (o, sweep) = exit_bound();
    report(6, "exit-probability bound", o);
    println!("{}", sweep_csv(&sweep.rows).trim_end());
    let (o, voter_rep) = voter();
    report(7, "voter special case", o);
    report(8, "convergence proxy", convergence_proxy());
    report(9, "determinism", determinism(&sweep, &voter_rep, &cert));

    let failed: Vec<u32> = results.iter().filter(|(_, _, o)| !o.pass).map(|(n, _, _)| *n).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", results.len());
    } else {
        println!("acceptance: FAILED criteria {failed:?}");
        std::process::exit(1);
    }
}

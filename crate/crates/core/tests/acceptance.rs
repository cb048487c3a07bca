//! Acceptance suite: one line per criterion; exits nonzero if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::FromPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tsallis_core::densityops::{affinity_exact, hellinger_exact, DensityOperator};
use tsallis_core::estimators::Decision;
use tsallis_core::harness::{
    cmd_run, cmd_sweep, cmd_verify, loglog_slope, ExperimentConfig, Instance, QuantityKind,
    RunMode, SweepGrid, VerifyOptions, FIXTURES,
};
use tsallis_core::linalg;
use tsallis_core::samplizer::{
    channel_distance_upper, choi_distance, exact_channel, exact_evolution, lmr_channel,
    samplize_channel, QueryCircuit, SampleLedger, SamplizerMode, DEFAULT_C0,
};

const MIN_SUCCESSES: usize = 20;
const TRIALS: usize = 30;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome { pass, detail }
    }
}

fn criterion(id: u32, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let pass = out.pass && elapsed <= budget;
    println!(
        "{} [{id:>2}] {name:<28} {:>8.2}s/{:>4}s  {}",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs(),
        out.detail
    );
    pass
}

fn fixture_rank(name: &str) -> usize {
    Instance::fixture(name).unwrap().rho.rank().max(Instance::fixture(name).unwrap().sigma.rank())
}

fn verify_suites(suites: &[&str], min_samples: usize, slack: f64) -> Outcome {
    let opts = VerifyOptions::default();
    let mut worst = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    let mut checks = 0;
    for suite in suites {
        let report = cmd_verify(Some(suite), &opts).unwrap();
        for c in &report.checks {
            checks += 1;
            worst = worst.max(c.max_slack);
            if !c.passed() || c.samples < min_samples || c.max_slack > slack.max(c.tolerance) {
                failures.push(format!("{}: {} (slack {:.3e}, n={})", c.suite, c.name, c.max_slack, c.samples));
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("{checks} checks, worst slack {worst:.3e}")
    } else {
        failures.join("; ")
    };
    Outcome::new(failures.is_empty() && checks > 0, detail)
}

fn oracle_fixtures() -> Outcome {
    let mut worst: f64 = 0.0;
    for d in [2usize, 4] {
        for e in [0.1, 0.25] {
            let probs: Vec<f64> = (0..d)
                .map(|i| if i < d / 2 { (1.0 + 2.0 * e) / d as f64 } else { (1.0 - 2.0 * e) / d as f64 })
                .collect();
            let rho = DensityOperator::diagonal(&probs).unwrap();
            let mixed = DensityOperator::maximally_mixed(d).unwrap();
            for a in [0.3, 0.5, 0.7] {
                let expect = ((1.0 + 2.0 * e).powf(a) + (1.0 - 2.0 * e).powf(a)) / 2.0;
                worst = worst.max((affinity_exact(&rho, &mixed, a).unwrap() - expect).abs());
            }
        }
    }
    Outcome::new(worst <= 1e-10, format!("12 cells, max deviation {worst:.2e}"))
}

fn fixture_config(name: &str, mode: RunMode, eps: f64) -> ExperimentConfig {
    ExperimentConfig {
        alpha: 0.5,
        dim: 2,
        rank: fixture_rank(name),
        eps,
        trials: TRIALS,
        mode,
        seed: 1,
        instance: Some(name.into()),
        ..Default::default()
    }
}

fn end_to_end(mode: RunMode, eps: f64) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in FIXTURES {
        let report = cmd_run(&fixture_config(name, mode, eps)).unwrap();
        let s = report.successes();
        pass &= s >= MIN_SUCCESSES;
        parts.push(format!("{name} {s}/{TRIALS}"));
    }
    Outcome::new(pass, parts.join(", "))
}

/// Closed-form sample charge of one run at `α = 1/2`, recomputed from the
/// repetition count and the polynomial degrees.
fn closed_form_ledger(eps: f64, r: usize, d1: usize, d2: usize, c1: f64, c0: f64) -> (u128, SampleLedger) {
    let a = 0.5f64;
    let root = eps.powf(1.0 / a);
    let delta = root / (256.0 * 40f64.powf(1.0 / a) * (r as f64).powf(1.0 - a));
    let k = (c1 / (delta * delta)).ceil() as u128;
    let per_query = delta / (d1 + d2) as f64;
    let l = (1.0 / per_query).ln();
    let charge = BigUint::from_f64((c0 / per_query * l * l).ceil()).unwrap();
    let kb = BigUint::from(k);
    let ledger = SampleLedger {
        samples_rho: &kb * (BigUint::from(d1) * &charge + 1u32),
        samples_sigma: &kb * BigUint::from(d2) * &charge,
    };
    (k, ledger)
}

fn end_to_end_sample() -> Outcome {
    let eps = 0.25;
    let mut out = end_to_end(RunMode::SampleIdeal, eps);
    let mut all_exact = true;
    for name in FIXTURES {
        let cfg = fixture_config(name, RunMode::SampleIdeal, eps);
        let report = cmd_run(&cfg).unwrap();
        let row = &report.rows[0];
        let (k, expect) = closed_form_ledger(eps, cfg.rank, row.d1, row.d2, cfg.c1, cfg.c0);
        let exact = report.rows.iter().all(|r| {
            r.k == Some(k)
                && r.samples_rho.as_ref() == Some(&expect.samples_rho)
                && r.samples_sigma.as_ref() == Some(&expect.samples_sigma)
        });
        if !exact {
            all_exact = false;
            out.detail.push_str(&format!("; {name} ledger differs from closed form"));
        }
    }
    if all_exact {
        out.detail.push_str("; ledgers match closed form");
    }
    out.pass &= all_exact;
    out
}

fn random_circuit(queries: usize, seed: u64) -> QueryCircuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = QueryCircuit::new(2).gate(linalg::haar_unitary(4, &mut rng), &[0, 1]).unwrap();
    for i in 0..queries {
        c = c
            .query(i % 2, 0, &[1], None, i % 3 == 2)
            .unwrap()
            .gate(linalg::haar_unitary(4, &mut rng), &[0, 1])
            .unwrap();
    }
    c
}

fn samplizer_fidelity() -> Outcome {
    let delta = 0.1;
    let inst = Instance::fixture("diag").unwrap();
    let states = [inst.rho, inst.sigma];
    let mut worst: f64 = 0.0;
    for q in [1usize, 2, 4] {
        let circuit = random_circuit(q, 100 + q as u64);
        let mut ledger = SampleLedger::default();
        let f = samplize_channel(&circuit, &states, delta, SamplizerMode::Ideal, DEFAULT_C0, &mut ledger).unwrap();
        let exact = exact_channel(&circuit, &states).unwrap();
        worst = worst.max(channel_distance_upper(&f, &exact).unwrap());
    }
    let mut ratios = Vec::new();
    for (rho, t) in [
        (DensityOperator::maximally_mixed(2).unwrap(), 1.0),
        (DensityOperator::basis(2, 0).unwrap(), PI / 2.0),
    ] {
        let exact = exact_evolution(&rho, t);
        let mut ledger = SampleLedger::default();
        let coarse = choi_distance(&lmr_channel(&rho, t, 10, &mut ledger).unwrap(), &exact).unwrap();
        let fine = choi_distance(&lmr_channel(&rho, t, 100, &mut ledger).unwrap(), &exact).unwrap();
        ratios.push(fine / coarse);
    }
    let pass = worst <= delta && ratios.iter().all(|&r| r <= 0.25);
    Outcome::new(
        pass,
        format!(
            "ideal worst {worst:.4} ≤ {delta}; lmr m=100/m=10 ratios {:.3}, {:.3}",
            ratios[0], ratios[1]
        ),
    )
}

fn certification() -> Outcome {
    let (lo, hi) = (0.05, 0.4);
    let mut pass = true;
    let mut parts = Vec::new();
    for mode in [RunMode::Query, RunMode::SampleIdeal] {
        for name in FIXTURES {
            let inst = Instance::fixture(name).unwrap();
            let h = hellinger_exact(&inst.rho, &inst.sigma).unwrap();
            let cfg = ExperimentConfig {
                quantity: QuantityKind::Hellinger,
                thresholds: Some((lo, hi)),
                ..fixture_config(name, mode, 0.1)
            };
            let report = cmd_run(&cfg).unwrap();
            let close = report.rows.iter().filter(|r| r.decision == Some(Decision::Close)).count();
            let far = report.rows.len() - close;
            let tag = if mode == RunMode::Query { "q" } else { "s" };
            if h <= lo {
                pass &= close >= MIN_SUCCESSES;
                parts.push(format!("{tag}:{name} close {close}/{TRIALS}"));
            } else if h >= hi {
                pass &= far >= MIN_SUCCESSES;
                parts.push(format!("{tag}:{name} far {far}/{TRIALS}"));
            } else {
                parts.push(format!("{tag}:{name} outside promise (d_H={h:.3}), close {close}/far {far}"));
            }
        }
    }
    Outcome::new(pass, parts.join(", "))
}

fn complexity_shape() -> Outcome {
    let base = ExperimentConfig { alpha: 0.5, dim: 8, eps: 0.15, trials: 10, seed: 3, ..Default::default() };
    let grid = SweepGrid {
        alphas: vec![0.5],
        ranks: vec![2, 4, 8],
        epss: vec![0.15],
        modes: vec![RunMode::Query],
    };
    let rows = cmd_sweep(&base, &grid).unwrap();
    let xs: Vec<f64> = rows.iter().map(|r| r.rank as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_cost).collect();
    let monotone = ys.windows(2).all(|w| w[1] >= w[0]);
    let slope = loglog_slope(&xs, &ys);
    if slope > 2.0 {
        println!("WARN [10] log-log slope {slope:.3} exceeds 1.5 + 0.5");
    }
    Outcome::new(
        monotone,
        format!(
            "mean queries {} (slope {slope:.3})",
            ys.iter().map(|y| format!("{y:.3e}")).collect::<Vec<_>>().join(" ≤ ")
        ),
    )
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        criterion(1, "oracle fixtures", secs(1), oracle_fixtures),
        criterion(2, "inequality suites", secs(30), || {
            verify_suites(
                &["pinsker", "hellinger", "power-mean", "holder", "jordan-hahn", "contractivity"],
                1000,
                1e-9,
            )
        }),
        criterion(3, "polynomial contracts", secs(60), || verify_suites(&["poly"], 1, 1e-10)),
        criterion(4, "block-encoding contracts", secs(60), || verify_suites(&["blockenc"], 1, 1e-9)),
        criterion(5, "proposition suites", secs(120), || {
            verify_suites(&["prop-query", "prop-sample"], 10, 1e-9)
        }),
        criterion(6, "query estimator fixtures", secs(300), || end_to_end(RunMode::Query, 0.1)),
        criterion(7, "sample estimator fixtures", secs(600), end_to_end_sample),
        criterion(8, "samplizer fidelity", secs(120), samplizer_fidelity),
        criterion(9, "hellinger certification", secs(300), certification),
        criterion(10, "complexity shape", secs(600), complexity_shape),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}

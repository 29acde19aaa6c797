//! Acceptance suite. Runs without the libtest harness so that every criterion
//! prints its `[PASS]`/`[FAIL]` line; exits non-zero if any criterion fails.
//! Run with `cargo test -p harq-aoi-cli --test acceptance`.

// Negated comparisons are deliberate: a NaN must count as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use harq_aoi::sim::{run, PolicyMode, SimConfig};
use harq_aoi::{
    closed_form, epoch_moments, grid_search, optimal_waits, p_of_lambda, solve_lambda_bisection,
    sweep_epsilon, AttemptProbs, BscParams, GridSpec, HarqScheme, Region, SumConvention, SweepSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CONVENTIONS: [SumConvention; 2] =
    [SumConvention::ZeroInclusive, SumConvention::ZeroExclusive];

/// Prints the verdict line and returns whether the criterion was met.
fn verdict(id: &str, title: &str, pass: bool, elapsed: Duration, detail: &str) -> bool {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!(
        "[{tag}] {id} {title} ({:.3} s): {detail}",
        elapsed.as_secs_f64()
    );
    pass
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Randomized `(n, m, q1, q2)` instances. Every third one sits at or next to
/// the region boundary `n = ceil(m·√(1 − q1))`.
fn random_instances(count: usize, seed: u64) -> Vec<(HarqScheme, AttemptProbs)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let m: u32 = rng.random_range(0..=100);
            let q1: f64 = rng.random_range(0.01..=1.0);
            let q2: f64 = rng.random_range(0.01..=1.0);
            let n = if i % 3 == 0 {
                let edge = (f64::from(m) * (1.0 - q1).sqrt()).ceil() as i64;
                (edge + rng.random_range(-1..=1)).max(1) as u32
            } else {
                rng.random_range(1..=100)
            };
            (
                HarqScheme::new(1, n, m).unwrap(),
                AttemptProbs::new(q1, q2).unwrap(),
            )
        })
        .collect()
}

fn instance_set() -> Vec<(HarqScheme, AttemptProbs)> {
    random_instances(1000, 0x5eed)
}

fn fixed_n_example(eps: f64, convention: SumConvention) -> harq_aoi::GridResult {
    grid_search(&GridSpec {
        data_len: 15,
        n_range: (20, 20),
        m_range: (0, 200),
        channel: BscParams::new(eps).unwrap(),
        convention,
    })
    .unwrap()
}

fn c1_good_channel_example() -> bool {
    let start = Instant::now();
    let mut passing = Vec::new();
    let mut details = Vec::new();
    for convention in CONVENTIONS {
        let res = fixed_n_example(0.1, convention);
        let sol = res.best.solution.unwrap();
        let ok =
            res.best.m == 1 && rel_err(sol.lambda_star, 31.54) <= 0.01 && sol.region == Region::R1;
        if ok {
            passing.push(convention.as_str());
        }
        details.push(format!(
            "{convention}: m={} λ*={:.4} {}",
            res.best.m, sol.lambda_star, sol.region
        ));
    }
    let elapsed = start.elapsed();
    let pass = !passing.is_empty() && elapsed < Duration::from_secs(1);
    let detail = format!(
        "{}; passing convention: {}",
        details.join(", "),
        passing.join("+")
    );
    verdict(
        "C1",
        "ε=0.1 optimum m=1, λ*≈31.54, R1",
        pass,
        elapsed,
        &detail,
    )
}

fn c2_bad_channel_example() -> bool {
    let start = Instant::now();
    let mut passing = Vec::new();
    let mut details = Vec::new();
    for convention in CONVENTIONS {
        let res = fixed_n_example(0.4, convention);
        let sol = res.best.solution.unwrap();
        let ok = res.best.m == 45
            && rel_err(sol.lambda_star, 174.97) <= 0.01
            && sol.region == Region::R2
            && sol.policy.w1 > 0.0
            && sol.policy.w2 == 0.0;
        if ok {
            passing.push(convention.as_str());
        }
        let at_45 = res.rows.iter().find(|r| r.m == 45).unwrap().lambda_star();
        details.push(format!(
            "{convention}: m={} λ*={:.4} {} w1={:.4} w2={} (m=45 gives λ={at_45:.4})",
            res.best.m, sol.lambda_star, sol.region, sol.policy.w1, sol.policy.w2
        ));
    }
    let elapsed = start.elapsed();
    let pass = !passing.is_empty() && elapsed < Duration::from_secs(5);
    let detail = format!(
        "{}; passing convention: {}",
        details.join(", "),
        passing.join("+")
    );
    verdict(
        "C2",
        "ε=0.4 optimum m=45, λ*≈174.97, R2",
        pass,
        elapsed,
        &detail,
    )
}

fn c3_sweep_monotone_and_ordered() -> bool {
    let start = Instant::now();
    let eps: Vec<f64> = (1..=9).map(|k| f64::from(k) * 0.05).collect();
    let lens = vec![10, 15, 20];
    let rows = sweep_epsilon(&SweepSpec::new(lens.clone(), eps.clone())).unwrap();
    let rho = |l: u32, i: usize| {
        rows.iter()
            .find(|r| r.data_len == l && r.epsilon == eps[i])
            .and_then(|r| r.rho_star())
            .unwrap_or(f64::NAN)
    };
    let mut problems = Vec::new();
    for &l in &lens {
        for i in 1..eps.len() {
            if !(rho(l, i) > rho(l, i - 1)) {
                problems.push(format!("ℓ={l}: ρ*({}) ≤ ρ*({})", eps[i], eps[i - 1]));
            }
        }
    }
    for (i, e) in eps.iter().enumerate() {
        if !(rho(20, i) >= rho(15, i) && rho(15, i) >= rho(10, i)) {
            problems.push(format!("ε={e}: ℓ ordering broken"));
        }
    }
    let elapsed = start.elapsed();
    let pass = problems.is_empty() && elapsed < Duration::from_secs(120);
    let detail = if problems.is_empty() {
        format!(
            "ρ* at ε=0.05/0.45: ℓ=10 {:.2}/{:.2}, ℓ=15 {:.2}/{:.2}, ℓ=20 {:.2}/{:.2}",
            rho(10, 0),
            rho(10, 8),
            rho(15, 0),
            rho(15, 8),
            rho(20, 0),
            rho(20, 8)
        )
    } else {
        problems.join("; ")
    };
    verdict(
        "C3",
        "sweep ρ* increasing in ε, ordered in ℓ",
        pass,
        elapsed,
        &detail,
    )
}

/// Moments by walking the transmission process round by round until the
/// undelivered mass is below `1e-14`. Returns `(E[X], E[X²], E[Y], P(Y=n))`.
fn process_moments(n: u32, m: u32, q1: f64, q2: f64) -> (f64, f64, f64, f64) {
    let (n, m) = (f64::from(n), f64::from(m));
    let (mut ex, mut ex2, mut ey, mut p_first) = (0.0, 0.0, 0.0, 0.0);
    let mut alive = 1.0;
    let mut elapsed = 0.0;
    while alive >= 1e-14 {
        let first = alive * q1;
        let t1 = elapsed + n;
        ex += first * t1;
        ex2 += first * t1 * t1;
        ey += first * n;
        p_first += first;

        let second = alive * (1.0 - q1) * q2;
        let t2 = elapsed + n + m;
        ex += second * t2;
        ex2 += second * t2 * t2;
        ey += second * (n + m);

        alive *= (1.0 - q1) * (1.0 - q2);
        elapsed = t2;
    }
    (ex, ex2, ey, p_first)
}

fn c4_moments_match_pmf_summation() -> bool {
    let start = Instant::now();
    let mut worst = (0.0f64, String::new());
    for (s, p) in instance_set() {
        let mo = epoch_moments(&s, &p);
        let (ex, ex2, ey, pyn) = process_moments(s.codeword_len(), s.ir_len(), p.q1(), p.q2());
        for (name, got, want) in [
            ("E[X]", mo.mean_x, ex),
            ("E[X²]", mo.mean_x2, ex2),
            ("E[Y]", mo.mean_y, ey),
            ("P(Y=n)", mo.prob_y_n, pyn),
        ] {
            let e = rel_err(got, want);
            if e > worst.0 {
                worst = (e, format!("{name} at {s:?} {p:?}"));
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = worst.0 < 1e-10 && elapsed < Duration::from_secs(10);
    let detail = format!(
        "1000 instances, worst relative error {:.2e} ({})",
        worst.0, worst.1
    );
    verdict(
        "C4",
        "closed-form moments vs PMF summation",
        pass,
        elapsed,
        &detail,
    )
}

fn c5_bisection_matches_closed_form() -> bool {
    let start = Instant::now();
    let (mut r1, mut r2, mut worst) = (0, 0, 0.0f64);
    let mut failures = Vec::new();
    for (s, p) in instance_set() {
        let sol = closed_form(&s, &p).unwrap();
        match sol.region {
            Region::R1 => r1 += 1,
            Region::R2 => r2 += 1,
            Region::R3 => {}
        }
        let bis = solve_lambda_bisection(&s, &p, 1e-10).unwrap();
        let gap = (bis - sol.lambda_star).abs();
        worst = worst.max(gap);
        if gap > 1e-8 {
            failures.push(format!("{s:?} {p:?}: {bis} vs {}", sol.lambda_star));
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && r1 > 0 && r2 > 0 && elapsed < Duration::from_secs(10);
    let detail = format!(
        "1000 instances (R1 {r1}, R2 {r2}), worst |Δλ| {worst:.2e}{}",
        failures
            .first()
            .map(|f| format!("; e.g. {f}"))
            .unwrap_or_default()
    );
    verdict(
        "C5",
        "bisection root vs closed form",
        pass,
        elapsed,
        &detail,
    )
}

fn c6_optimum_exceeds_mean_busy_period() -> bool {
    let start = Instant::now();
    let mut min_margin = f64::INFINITY;
    let mut violations = 0;
    for (s, p) in instance_set() {
        let sol = closed_form(&s, &p).unwrap();
        let margin = sol.lambda_star - epoch_moments(&s, &p).mean_x;
        min_margin = min_margin.min(margin);
        if !(margin > 0.0) {
            violations += 1;
        }
    }
    let elapsed = start.elapsed();
    let detail =
        format!("1000 instances, {violations} violations, min λ* − E[X] = {min_margin:.4}");
    verdict("C6", "λ* > E[X]", violations == 0, elapsed, &detail)
}

fn c7_region_properties() -> bool {
    let start = Instant::now();
    let mut failures = Vec::new();
    for (s, p) in instance_set() {
        let mo = epoch_moments(&s, &p);
        let (n, m) = (f64::from(s.codeword_len()), f64::from(s.ir_len()));
        let zero_wait_optimal = p_of_lambda(mo.mean_x + n, &s, &p) <= 0.0;
        let condition = n >= m * (1.0 - p.q1()).sqrt();
        if zero_wait_optimal != condition {
            failures.push(format!("{s:?} {p:?}: region equivalence"));
        }
        if p_of_lambda(mo.mean_x + n + m, &s, &p) > 0.0 {
            failures.push(format!("{s:?} {p:?}: p(E[X]+n+m) > 0"));
        }
        let sol = closed_form(&s, &p).unwrap();
        if sol.policy.w2 != 0.0 || optimal_waits(sol.lambda_star, &s, &p).w2 != 0.0 {
            failures.push(format!("{s:?} {p:?}: w2* ≠ 0"));
        }
    }
    let elapsed = start.elapsed();
    let detail = format!(
        "1000 instances, {} failures{}",
        failures.len(),
        failures
            .first()
            .map(|f| format!("; e.g. {f}"))
            .unwrap_or_default()
    );
    verdict(
        "C7",
        "region boundary, p(E[X]+n+m) ≤ 0, w2* = 0",
        failures.is_empty(),
        elapsed,
        &detail,
    )
}

fn c8_simulation_matches_analysis() -> bool {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_z = 0.0f64;
    let mut failures = Vec::new();
    for i in 0..20u64 {
        let s = HarqScheme::new(1, rng.random_range(1..=100), rng.random_range(0..=100)).unwrap();
        let p =
            AttemptProbs::new(rng.random_range(0.05..=1.0), rng.random_range(0.05..=1.0)).unwrap();
        let sol = closed_form(&s, &p).unwrap();
        let cfg = SimConfig::new(
            1_000_000,
            100 + i,
            PolicyMode::Threshold {
                lambda: sol.lambda_star,
            },
        )
        .unwrap();
        let st = run(&s, &p, &cfg).unwrap();
        let z = (st.avg_aoi - sol.lambda_star) / st.stderr_avg_aoi;
        worst_z = worst_z.max(z.abs());
        if !(z.abs() <= 4.0) {
            failures.push(format!("{s:?} {p:?}: z = {z:.2}"));
        }
    }

    let s = HarqScheme::new(1, 10, 3).unwrap();
    let p = AttemptProbs::new(1.0, 0.5).unwrap();
    let sol = closed_form(&s, &p).unwrap();
    let cfg = SimConfig::new(
        1_000_000,
        1,
        PolicyMode::Threshold {
            lambda: sol.lambda_star,
        },
    )
    .unwrap();
    let exact = run(&s, &p, &cfg).unwrap().avg_aoi;
    if exact != 15.0 || sol.lambda_star != 15.0 {
        failures.push(format!(
            "q1=1, n=10: simulated {exact}, analytic {}",
            sol.lambda_star
        ));
    }

    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < Duration::from_secs(60);
    let detail = format!(
        "20 instances at 10⁶ epochs, worst |z| {worst_z:.2}; q1=1 n=10 gives {exact}{}",
        failures
            .first()
            .map(|f| format!("; e.g. {f}"))
            .unwrap_or_default()
    );
    verdict(
        "C8",
        "simulated AoI under Threshold(λ*) vs λ*",
        pass,
        elapsed,
        &detail,
    )
}

fn run_cli(dir: &Path, args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_harq-aoi"))
        .current_dir(dir)
        .env("SOURCE_DATE_EPOCH", "0")
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn c9_cli_outputs_are_deterministic() -> bool {
    let start = Instant::now();
    let invocations: [&[&str]; 5] = [
        &[
            "analyze", "--l", "15", "--n", "20", "--m", "45", "--eps", "0.4", "--out", "out.json",
        ],
        &[
            "simulate", "--l", "15", "--n", "20", "--m", "1", "--eps", "0.1", "--epochs", "200000",
            "--seed", "42", "--out", "out.json",
        ],
        &[
            "simulate",
            "--q1",
            "0.3",
            "--q2",
            "0.6",
            "--n",
            "12",
            "--m",
            "9",
            "--epochs",
            "100000",
            "--replicas",
            "4",
            "--seed",
            "7",
            "--out",
            "out.json",
        ],
        &[
            "optimize", "--l", "15", "--eps", "0.4", "--n-min", "20", "--n-max", "24", "--csv",
            "out.csv", "--json", "out.json",
        ],
        &[
            "sweep", "--l", "10,15", "--eps", "0.1,0.3", "--csv", "out.csv",
        ],
    ];
    let mut differing = Vec::new();
    for args in invocations {
        let capture = || {
            let dir = tempfile::tempdir().unwrap();
            let stdout = run_cli(dir.path(), args);
            let mut files: Vec<_> = std::fs::read_dir(dir.path())
                .unwrap()
                .map(|e| {
                    let path = e.unwrap().path();
                    (
                        path.file_name().unwrap().to_owned(),
                        std::fs::read(&path).unwrap(),
                    )
                })
                .collect();
            files.sort();
            (stdout, files)
        };
        let (first, second) = (capture(), capture());
        assert!(!first.1.is_empty());
        if first != second {
            differing.push(args[0]);
        }
    }
    let elapsed = start.elapsed();
    let detail = if differing.is_empty() {
        "analyze, simulate (single and replicated), optimize, sweep: outputs and manifests identical".to_string()
    } else {
        format!("differing outputs from {}", differing.join(", "))
    };
    verdict(
        "C9",
        "repeated CLI runs are byte-identical",
        differing.is_empty(),
        elapsed,
        &detail,
    )
}

fn main() {
    let criteria: [fn() -> bool; 9] = [
        c1_good_channel_example,
        c2_bad_channel_example,
        c3_sweep_monotone_and_ordered,
        c4_moments_match_pmf_summation,
        c5_bisection_matches_closed_form,
        c6_optimum_exceeds_mean_busy_period,
        c7_region_properties,
        c8_simulation_matches_analysis,
        c9_cli_outputs_are_deterministic,
    ];
    let passed = criteria.iter().filter(|c| c()).count();
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
    if passed < criteria.len() {
        std::process::exit(1);
    }
}

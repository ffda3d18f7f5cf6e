//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::sync::OnceLock;
use std::time::Instant;

use data_pricing::discretization::{build_space, size_bound, GridParams, Scheme};
use data_pricing::harness::{
    prepare, run_adversarial_prepared, run_stochastic_prepared, write_run, ExperimentConfig, RunOutput,
};
use data_pricing::market::{buyer_demand, expected_revenue, MStepCurve, MarketInstance, TypeDistribution, ValuationCurve};
use data_pricing::offline::{best_in_space, brute_force_opt};
use data_pricing::price_space::{dense_demand, m_step_reduce, DenseCurve};
use data_pricing::valuation::{measure_constants_all, random_monotone_curve};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn report(no: usize, name: &str, start: Instant, v: &Verdict) -> bool {
    println!(
        "criterion {no} [{name}]: {} ({}; {:.1}s)",
        if v.pass { "PASS" } else { "FAIL" },
        v.detail,
        start.elapsed().as_secs_f64()
    );
    v.pass
}

fn random_instance(rng: &mut ChaCha8Rng, m: usize, n_total: usize) -> MarketInstance {
    let curves = (0..m)
        .map(|_| random_monotone_curve(rng.gen(), n_total, rng.gen_range(1..=5)).unwrap())
        .collect();
    MarketInstance::new(curves).unwrap()
}

fn random_distribution(rng: &mut ChaCha8Rng, m: usize) -> TypeDistribution {
    let w: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    let mut w: Vec<f64> = w.iter().map(|x| x / s).collect();
    let rest: f64 = w[1..].iter().sum();
    w[0] = 1.0 - rest;
    TypeDistribution::new(w).unwrap()
}

/// Price levels mixing fresh uniforms with exact valuation values, which
/// produce utility ties.
fn random_levels(rng: &mut ChaCha8Rng, inst: &MarketInstance, k: usize) -> Vec<f64> {
    let n_total = inst.n_total();
    let mut levels: Vec<f64> = Vec::new();
    while levels.len() < k {
        let w = if rng.gen_bool(0.5) {
            let i = rng.gen_range(0..inst.num_types());
            inst.valuation(i).value(rng.gen_range(1..=n_total))
        } else {
            rng.gen::<f64>()
        };
        if w > 0.0 && !levels.contains(&w) {
            levels.push(w);
        }
    }
    levels.sort_by(f64::total_cmp);
    levels
}

/// Largest maximizer of `v(n) - p(n)` over every `n` in `0..=N`.
fn demand_by_enumeration(v: &ValuationCurve, p: &MStepCurve) -> usize {
    let mut best = (0, 0.0);
    for n in 1..=v.n_total() {
        let u = v.value(n) - p.price(n);
        if u >= best.1 {
            best = (n, u);
        }
    }
    best.0
}

fn criterion_1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n_total = rng.gen_range(1..=20);
        let m = rng.gen_range(1..=3);
        let inst = random_instance(&mut rng, m, n_total);
        let k = rng.gen_range(1..=n_total.min(4));
        let mut interior: Vec<usize> = (1..n_total).collect();
        interior.shuffle(&mut rng);
        let mut bounds: Vec<usize> = interior[..k - 1].to_vec();
        bounds.sort_unstable();
        bounds.push(n_total);
        let p = MStepCurve::from_parts(n_total, bounds, random_levels(&mut rng, &inst, k)).unwrap();
        for v in inst.valuations() {
            if buyer_demand(v, &p).unwrap() != demand_by_enumeration(v, &p) {
                mismatches += 1;
            }
        }
    }
    Verdict {
        pass: mismatches == 0,
        detail: format!("1000 pairs, {mismatches} mismatches"),
    }
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut violations = 0;
    for _ in 0..500 {
        let n_total = rng.gen_range(1..=30);
        let m = rng.gen_range(1..=4);
        let inst = random_instance(&mut rng, m, n_total);
        let q = random_distribution(&mut rng, m);
        let mut prices = vec![0.0];
        for n in 1..=n_total {
            let prev: f64 = prices[n - 1];
            let next = match rng.gen_range(0..3) {
                0 => prev,
                1 => inst.valuation(rng.gen_range(0..m)).value(n).max(prev),
                _ => prev + rng.gen::<f64>() * 0.2,
            };
            prices.push(next);
        }
        let p = DenseCurve::new(prices).unwrap();
        let reduced = m_step_reduce(&p, &inst).unwrap();
        let old_rev: f64 = inst
            .valuations()
            .iter()
            .zip(q.weights())
            .map(|(v, w)| w * p.price(dense_demand(v, &p).unwrap()))
            .sum();
        let new_rev = expected_revenue(&inst, &q, &reduced).unwrap();
        if new_rev < old_rev - 1e-12 {
            violations += 1;
        }
        if reduced.num_steps() > m {
            violations += 1;
        }
        for v in inst.valuations() {
            let old = dense_demand(v, &p).unwrap();
            let new = buyer_demand(v, &reduced).unwrap();
            if new != old && new != n_total {
                violations += 1;
            }
        }
    }
    Verdict {
        pass: violations == 0,
        detail: format!("500 curves, {violations} violations"),
    }
}

fn scaled(v: &ValuationCurve, factor: f64) -> ValuationCurve {
    ValuationCurve::new(v.values().iter().map(|x| x * factor).collect()).unwrap()
}

fn criterion_3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut violations = 0;
    let mut checks = 0;
    let mut worst = f64::INFINITY;
    for scheme in [Scheme::Monotone, Scheme::Smooth, Scheme::Diminishing] {
        let mut made = 0;
        while made < 10 {
            let m = rng.gen_range(1..=3);
            let n_total = if m == 3 { rng.gen_range(3..=10) } else { rng.gen_range(3..=15) };
            let mut inst = random_instance(&mut rng, m, n_total);
            let raw = measure_constants_all(inst.valuations());
            if scheme == Scheme::Smooth {
                // the grid needs floor(eps*N/(m*L)) >= 1 at the finest eps
                let limit = 0.1 * n_total as f64 / m as f64;
                if raw.smoothness > limit {
                    let f = 0.95 * limit / raw.smoothness;
                    inst = MarketInstance::new(inst.valuations().iter().map(|v| scaled(v, f)).collect()).unwrap();
                }
            }
            let c = measure_constants_all(inst.valuations());
            if scheme == Scheme::Diminishing && c.diminishing <= 0.0 {
                continue;
            }
            made += 1;
            let q = random_distribution(&mut rng, m);
            let oracle = brute_force_opt(&inst, &q, 0.01).unwrap().revenue;
            for eps in [0.2, 0.1] {
                let params = GridParams::new(eps, m, n_total)
                    .with_smoothness(c.smoothness)
                    .with_diminishing(c.diminishing);
                let space = build_space(&params, scheme)
                    .unwrap()
                    .with_cap(500_000_000)
                    .pruned_for(&inst)
                    .unwrap();
                let best = best_in_space(&inst, &q, &space).unwrap().revenue;
                let floor = oracle - 2.0 * eps / (1.0 + eps) - 0.01 - 1e-9;
                checks += 1;
                worst = worst.min(best - floor);
                if best < floor {
                    violations += 1;
                }
            }
        }
    }
    Verdict {
        pass: violations == 0,
        detail: format!("{checks} checks over 3 schemes, {violations} violations, min slack {worst:.4}"),
    }
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut violations = 0;
    let mut streamed = 0;
    for _ in 0..10 {
        let n_total = rng.gen_range(2..=40);
        let m = rng.gen_range(1..=3);
        let eps = rng.gen_range(0.15..0.6);
        let space = build_space(&GridParams::new(eps, m, n_total), Scheme::Monotone).unwrap();
        let Some(count) = space.count().exact() else {
            violations += 1;
            continue;
        };
        if count as f64 > size_bound(n_total, m, eps) {
            violations += 1;
        }
        if count <= 3_000_000 {
            streamed += 1;
            if space.iter().count() as u128 != count {
                violations += 1;
            }
        }
    }
    Verdict {
        pass: violations == 0 && streamed > 0,
        detail: format!("10 draws, {streamed} streamed, {violations} violations"),
    }
}

const SCALING_CONFIG: &str = r#"
schema_version = 1

[instance]
n_total = 50
types = [
    { kind = "linear", ceiling = 0.06 },
    { kind = "linear", ceiling = 0.04 },
]

[space]
scheme = "smooth"
epsilon = "auto"
cap = 20000000

[run]
horizon = 1000

[stochastic]
distribution = [0.7, 0.3]

[adversarial]
kind = "block"
blocks = 2
"#;

const HORIZONS: [u64; 3] = [1000, 4000, 16000];
const SEEDS: u64 = 20;

fn scaling_config() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(SCALING_CONFIG).unwrap()
}

/// Mean final regret per horizon, and the runs themselves when kept.
fn scaling_runs(adversarial: bool) -> Vec<(u64, Vec<RunOutput>)> {
    let cfg = scaling_config();
    HORIZONS
        .iter()
        .map(|&t| {
            let prep = prepare(&cfg, t).unwrap();
            let runs = (0..SEEDS)
                .map(|seed| {
                    let mut out = if adversarial {
                        run_adversarial_prepared(&prep, seed).unwrap()
                    } else {
                        run_stochastic_prepared(&prep, seed).unwrap()
                    };
                    out.records = Vec::new();
                    out
                })
                .collect();
            (t, runs)
        })
        .collect()
}

fn adversarial_runs() -> &'static Vec<(u64, Vec<RunOutput>)> {
    static RUNS: OnceLock<Vec<(u64, Vec<RunOutput>)>> = OnceLock::new();
    RUNS.get_or_init(|| scaling_runs(true))
}

fn ratios(runs: &[(u64, Vec<RunOutput>)]) -> (Vec<f64>, Vec<f64>) {
    let means: Vec<f64> = runs
        .iter()
        .map(|(_, r)| r.iter().map(|o| o.summary.final_regret).sum::<f64>() / r.len() as f64)
        .collect();
    let ratios = means.windows(2).map(|w| w[1] / w[0]).collect();
    (means, ratios)
}

fn criterion_5() -> Verdict {
    let runs = scaling_runs(false);
    let (means, ratios) = ratios(&runs);
    let m = 2.0;
    let mut worst_bound = 0.0f64;
    for (_, outs) in &runs {
        for o in outs {
            for c in &o.summary.checkpoints {
                let t = c.t as f64;
                let bound = 100.0 * m * (t * t.ln()).sqrt();
                // ln 1 = 0 makes the bound vacuous at t = 1
                if c.t > 1 {
                    worst_bound = worst_bound.max(c.cum_regret / bound);
                }
            }
        }
    }
    Verdict {
        pass: ratios.iter().all(|&r| r <= 2.6) && worst_bound <= 1.0,
        detail: format!(
            "mean regret {:?}, ratios {:?}, max regret/bound {:.4}",
            means.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>(),
            ratios.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>(),
            worst_bound
        ),
    }
}

fn criterion_6() -> Verdict {
    let (means, ratios) = ratios(adversarial_runs());
    Verdict {
        pass: ratios.iter().all(|&r| r <= 2.6),
        detail: format!(
            "mean regret {:?}, ratios {:?}",
            means.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>(),
            ratios.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>()
        ),
    }
}

fn criterion_7() -> Verdict {
    let mut rounds = 0;
    let mut mismatches = 0;
    let mut ub = 0;
    let mut checks = 0;
    let mut btl = 0;
    let mut runs = 0;
    let mut min_comparators = usize::MAX;
    for (_, outs) in adversarial_runs() {
        for o in outs {
            let a = o.summary.audit.as_ref().unwrap();
            runs += 1;
            rounds += a.rounds;
            mismatches += a.feedback_mismatches;
            ub += a.upper_bound_violations;
            checks += a.btl_checks;
            btl += a.btl_violations;
            min_comparators = min_comparators.min(a.comparators);
        }
    }
    Verdict {
        pass: mismatches == 0 && ub == 0 && btl == 0 && min_comparators >= 100,
        detail: format!(
            "{runs} runs, {rounds} rounds, {mismatches} feedback mismatches, {ub} upper-bound violations, {btl}/{checks} be-the-leader violations"
        ),
    }
}

fn criterion_8() -> Verdict {
    let cfg = scaling_config();
    let prep = prepare(&cfg, 10_000).unwrap();
    let (mut pairs, mut violations) = (0, 0);
    for seed in 0..SEEDS {
        let c = run_stochastic_prepared(&prep, 1000 + seed).unwrap().summary.coverage.unwrap();
        pairs += c.pairs;
        violations += c.violations;
    }
    let rate = violations as f64 / pairs as f64;
    Verdict {
        pass: rate <= 0.05,
        detail: format!("{violations}/{pairs} pairs outside the radius, rate {rate:.5}"),
    }
}

fn criterion_9() -> Verdict {
    let text = r#"
schema_version = 1
[instance]
n_total = 12
types = [
    { kind = "power_law", alpha = 0.9, beta = 0.6, gamma = 0.5 },
    { kind = "random", seed = 17, knots = 4 },
    { kind = "linear", ceiling = 0.5 },
]
[space]
scheme = "diminishing"
epsilon = 0.3
[run]
horizon = 3000
seeds = [4, 9]
[stochastic]
distribution = [0.2, 0.5, 0.3]
[adversarial]
kind = "random"
segment = 250
"#;
    let cfg = ExperimentConfig::from_toml_str(text).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut compared = 0;
    let mut differing = 0;
    for dir in [a.path(), b.path()] {
        let prep = prepare(&cfg, cfg.run.horizon).unwrap();
        for &seed in &cfg.run.seeds {
            write_run(&run_stochastic_prepared(&prep, seed).unwrap(), dir).unwrap();
            write_run(&run_adversarial_prepared(&prep, seed).unwrap(), dir).unwrap();
        }
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    for name in &names {
        compared += 1;
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap_or_default();
        if x != y {
            differing += 1;
        }
    }
    Verdict {
        pass: differing == 0 && compared == 8,
        detail: format!("{compared} files compared, {differing} differ"),
    }
}

fn main() {
    type Criterion = (usize, &'static str, fn() -> Verdict);
    let criteria: [Criterion; 9] = [
        (1, "demand oracle equivalence", criterion_1),
        (2, "m-step reduction", criterion_2),
        (3, "discretization approximation", criterion_3),
        (4, "space size bounds", criterion_4),
        (5, "stochastic regret scaling", criterion_5),
        (6, "adversarial regret scaling", criterion_6),
        (7, "FTPL feedback identity and be-the-leader", criterion_7),
        (8, "UCB confidence coverage", criterion_8),
        (9, "determinism", criterion_9),
    ];
    let only: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = Vec::new();
    for (no, name, f) in criteria {
        if !only.is_empty() && !only.contains(&no) {
            continue;
        }
        let start = Instant::now();
        if !report(no, name, start, &f()) {
            failed.push(no);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}

//! Acceptance suite: one pass/fail line per criterion. Runs without the test
//! harness so the lines show up in `cargo test` output; exits nonzero if any
//! criterion fails.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use benchlab::agents::Agent;
use benchlab::audit::{placebo_test, GuardedEvaluator, LabelBiasedEvaluator, PlaceboVerdict};
use benchlab::channel::{gaussian_benchmark, xor_pair_benchmark, Artifact};
use benchlab::discrim::{estimate_kappa, kl_gaussian, plan_samples, validate_misranking, GaussianKernelParams, Separation};
use benchlab::experiments::{prompt_edit_workflow, reproduce_counterexample, run_pilot, WorkflowConfig};
use benchlab::guard::{guarded_evaluate, EvaluationMode, ObservationPolicy};
use benchlab::jpc::{compare_transcript_laws, Verdict};
use benchlab::prompt_space::{edit_distance, levenshtein, ClauseSequence, KnobMetric};
use benchlab::rng::{seeded, stream};

use common::*;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lib<T>(r: benchlab::Result<T>) -> Result<T, String> {
    r.map_err(|e| format!("error: {e}"))
}

fn counterexample() -> Check {
    let start = Instant::now();
    let report = lib(reproduce_counterexample(100_000, 1))?;
    let secs = start.elapsed().as_secs_f64();
    let tolerances = [0.005, 0.005, 0.005, 0.007, 0.005, 0.008];
    let expected = [
        ("Q(1|0)", 0.18),
        ("Q(1|1)", 0.48),
        ("P_B(w2=1)", 0.10),
        ("P_B(o2=1)", 0.21),
        ("P_B'(w2=1)", 0.90),
        ("P_B'(o2=1)", 0.45),
    ];
    let mut worst = 0.0f64;
    let mut misses = Vec::new();
    for ((name, value), tol) in expected.iter().zip(tolerances) {
        let row = report.get(name).ok_or(format!("missing {name}"))?;
        let err = (row.estimate - value).abs();
        worst = worst.max(err / tol);
        if err > tol {
            misses.push(format!("{name}={:.4}", row.estimate));
        }
    }
    ensure(
        misses.is_empty() && secs < 30.0,
        format!("worst |err|/tol {worst:.2}, {secs:.1}s, misses {misses:?}"),
    )
}

fn jpc_sufficiency() -> Check {
    let b = lib(xor_pair_benchmark([0.1, 0.4], false))?;
    let b2 = lib(xor_pair_benchmark([0.1, 0.4], true))?;
    let fixed = Agent::fixed(vec![Artifact::label("0"), Artifact::label("1")]);
    let comparer = Agent::MeanComparer { first: Artifact::label("0"), second: Artifact::label("1"), reps_per_arm: 2 };
    let mut false_rejections = BTreeMap::new();
    for (agent, horizon) in [(&fixed, 2), (&comparer, 5)] {
        let mut rejected = 0;
        for audit in 0..50 {
            let mut rng = stream(202, audit);
            let r = lib(compare_transcript_laws(agent, &b, &b2, ObservationPolicy::AggregateOnly, horizon, 20_000, 0.01, &mut rng))?;
            rejected += usize::from(r.verdict == Verdict::Rejected);
        }
        false_rejections.insert(agent.name(), rejected);
    }
    let leak = Agent::xor_leak_distinguisher();
    let mut caught = 0;
    for audit in 0..100 {
        let mut rng = stream(303, audit);
        let r = lib(compare_transcript_laws(&leak, &b, &b2, ObservationPolicy::LeakRawVotes, 2, 100_000, 0.01, &mut rng))?;
        caught += usize::from(r.verdict == Verdict::Rejected);
    }
    let fr_ok = false_rejections.values().all(|&k| k as f64 / 50.0 <= 0.01);
    ensure(
        fr_ok && caught >= 99,
        format!("false rejections {false_rejections:?} of 50 each, leak rejected {caught}/100"),
    )
}

fn kl_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (mp, mq) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let (vp, vq) = (rng.gen_range(0.05..5.0), rng.gen_range(0.05..5.0));
        let kl = lib(kl_gaussian(GaussianKernelParams { mean: mp, variance: vp }, GaussianKernelParams { mean: mq, variance: vq }))?;
        let oracle = kl_by_integration(mp, vp, mq, vq);
        worst = worst.max((kl - oracle).abs() / oracle);
    }
    let mut exact = true;
    for _ in 0..1000 {
        let (m1, m2, v) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(0.05..5.0));
        let kl = lib(kl_gaussian(GaussianKernelParams { mean: m1, variance: v }, GaussianKernelParams { mean: m2, variance: v }))?;
        let d: f64 = m1 - m2;
        exact &= kl == d * d / (2.0 * v);
    }
    let g = |m, v| GaussianKernelParams { mean: m, variance: v };
    let a = lib(kl_gaussian(g(0.0, 1.0), g(0.0, 4.0)))?;
    let b = lib(kl_gaussian(g(0.0, 4.0), g(0.0, 1.0)))?;
    let asym = (a - 0.318147).abs() < 1e-6 && (b - 0.806853).abs() < 1e-6;
    ensure(
        worst < 1e-6 && exact && asym,
        format!("max rel err {worst:.2e}, homoscedastic exact {exact}, asymmetry {a:.6}/{b:.6}"),
    )
}

fn misrank_dominance() -> Check {
    let grid = [1u64, 2, 4, 8, 16, 32];
    let episodes = 10_000u64;
    let (mut over_bound, mut off_oracle, mut cells) = (Vec::new(), Vec::new(), 0);
    let mut seed = 404;
    for delta in [0.25, 0.5, 1.0, 2.0] {
        for sigma in [0.5, 1.0, 2.0] {
            seed += 1;
            let spec = lib(gaussian_benchmark([("hi", delta), ("lo", 0.0)], sigma))?;
            let curve = lib(validate_misranking(
                &spec,
                &Artifact::label("hi"),
                &Artifact::label("lo"),
                &grid,
                episodes,
                Separation::Known { delta_mu: delta, sigma },
                &mut seeded(seed),
            ))?;
            for p in &curve.points {
                cells += 1;
                let bound = (-(p.n as f64) * delta * delta / (4.0 * sigma * sigma)).exp();
                if p.misrank_rate > bound + 3.0 * binomial_se(bound, episodes) {
                    over_bound.push((delta, sigma, p.n));
                }
                let exact = phi_lower((p.n as f64 * delta * delta / (2.0 * sigma * sigma)).sqrt());
                if (p.misrank_rate - exact).abs() > 3.0 * binomial_se(exact, episodes) {
                    off_oracle.push((delta, sigma, p.n, p.misrank_rate, exact));
                }
            }
        }
    }
    ensure(
        over_bound.is_empty() && off_oracle.is_empty(),
        format!("{cells} cells; above bound {over_bound:?}; off exact oracle {off_oracle:?}"),
    )
}

fn planner() -> Check {
    let a = lib(plan_samples(0.02, 0.05))?.n_required;
    let b = lib(plan_samples(1.0, (-1.0f64).exp()))?.n_required;
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut violations = 0;
    for _ in 0..1000 {
        let (k1, k2) = (rng.gen_range(1e-3..5.0), rng.gen_range(1e-3..5.0));
        let (d1, d2) = (rng.gen_range(1e-6..1.0), rng.gen_range(1e-6..1.0));
        let n = |k, d| plan_samples(k, d).map(|p| p.n_required).unwrap_or(u64::MAX);
        let (klo, khi) = if k1 < k2 { (k1, k2) } else { (k2, k1) };
        let (dlo, dhi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        violations += usize::from(n(klo, d1) < n(khi, d1)) + usize::from(n(k1, dlo) < n(k1, dhi));
    }
    ensure(
        a == 300 && b == 2 && violations == 0,
        format!("plan(0.02, 0.05)={a}, plan(1, 1/e)={b}, monotonicity violations {violations}/2000"),
    )
}

fn kappa_recovery() -> Check {
    // knob positions on a half-step grid; means sqrt(2) per unit so pairs at
    // distance >= 1 have SNR >= 1, with equality for unit neighbours
    let positions: Vec<f64> = (0..9).map(|i| i as f64 * 0.5).collect();
    let artifacts: Vec<Artifact> = (0..positions.len()).map(|i| Artifact::label(format!("k{i}"))).collect();
    let spec = lib(gaussian_benchmark(
        positions.iter().enumerate().map(|(i, x)| (format!("k{i}"), x * std::f64::consts::SQRT_2)),
        1.0,
    ))?;
    let metric = KnobMetric {
        knobs: positions.iter().enumerate().map(|(i, x)| (format!("k{i}"), vec![*x])).collect(),
        scale: vec![1.0],
    };
    let mut hits = 0;
    let mut points = Vec::new();
    for trial in 0..100 {
        let pilot = lib(run_pilot(&spec, &artifacts, 10_000, 9000 + trial))?;
        let k = lib(estimate_kappa(&pilot, &metric, 1.0, 0.05))?;
        hits += usize::from((k.point - 1.0).abs() <= 0.1);
        points.push(k.point);
    }
    points.sort_by(f64::total_cmp);
    ensure(
        hits >= 95,
        format!("{hits}/100 within 0.1 of 1.0; range [{:.3}, {:.3}]", points[0], points[99]),
    )
}

fn workflow() -> Check {
    let report = lib(prompt_edit_workflow(&WorkflowConfig::default()))?;
    let cross = report.crossing_ratio.ok_or("misranking never crossed below delta")?;
    let slope = report.slope_ratio.ok_or("no slope fit")?;
    let within = |x: f64| (0.5..=2.0).contains(&x);
    ensure(
        within(cross) && within(slope),
        format!(
            "kappa {:.4}, n_req {}, crossing at {:?} (ratio {cross:.2}), slope ratio {slope:.2}",
            report.kappa.point, report.plan.n_required, report.empirical_crossing
        ),
    )
}

fn edit_distance_oracle_check() -> Check {
    let all = all_sequences(&["a", "b", "c"], 4);
    let mut pairs = 0u64;
    let mut mismatches = 0u64;
    for x in &all {
        for y in &all {
            pairs += 1;
            mismatches += u64::from(levenshtein(x, y) != edit_distance_oracle(x, y));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let alphabet = ["alpha", "beta", "gamma", "delta", "eps"];
    let mut random_mismatches = 0;
    for _ in 0..10_000 {
        let draw = |rng: &mut ChaCha8Rng| -> Vec<String> {
            let len = rng.gen_range(5..=14);
            (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())].to_string()).collect()
        };
        let (x, y) = (draw(&mut rng), draw(&mut rng));
        let (sx, sy) = (ClauseSequence::new(x.clone()).unwrap(), ClauseSequence::new(y.clone()).unwrap());
        random_mismatches += usize::from(edit_distance(&sx, &sy) != edit_distance_oracle(&x, &y));
    }
    ensure(
        mismatches == 0 && random_mismatches == 0,
        format!("{pairs} exhaustive pairs, {mismatches} mismatches; 10000 random pairs, {random_mismatches} mismatches"),
    )
}

fn hygiene() -> Check {
    let text = "1. Summarize the report\n2. Keep numbers exact";
    let spec = lib(gaussian_benchmark([("summarize the report\nkeep numbers exact", 0.5)], 0.3))?;

    // deterministic mode: same bits whatever the caller's rng state or provenance
    let mode = EvaluationMode::deterministic("v7");
    let mut bits = std::collections::BTreeSet::new();
    for s in 0..200u64 {
        let w = Artifact::text("x", text).with_provenance("submitter", format!("team-{s}"));
        let o = lib(guarded_evaluate(&spec, &w, &mode, ObservationPolicy::AggregateOnly, &mut seeded(s)))?;
        bits.insert(o.aggregate.to_bits());
    }
    let reproducible = bits.len() == 1;

    // provenance randomization in fresh mode
    let xor = lib(xor_pair_benchmark([0.1, 0.4], false))?;
    let mut worst_z = 0.0f64;
    for (spec, label) in [(&spec, None), (&xor, Some("0")), (&xor, Some("1"))] {
        let base = match label {
            Some(l) => Artifact::label(l),
            None => Artifact::text("x", text),
        };
        let n = 20_000;
        let mut rng = seeded(77);
        let mut plain = Vec::with_capacity(n);
        let mut tagged = Vec::with_capacity(n);
        for _ in 0..n {
            let fresh = EvaluationMode::fresh();
            plain.push(lib(guarded_evaluate(spec, &base, &fresh, ObservationPolicy::AggregateOnly, &mut rng))?.aggregate);
            let tag = format!("{:x}", rng.next_u64());
            let w = base.clone().with_provenance("author", tag.clone()).with_provenance("method", tag);
            tagged.push(lib(guarded_evaluate(spec, &w, &fresh, ObservationPolicy::AggregateOnly, &mut rng))?.aggregate);
        }
        let stats = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
            (m, var / v.len() as f64)
        };
        let ((ma, sa), (mb, sb)) = (stats(&plain), stats(&tagged));
        worst_z = worst_z.max((ma - mb).abs() / (sa + sb).sqrt());
    }

    // placebo power against a 0.5 sigma label bias, and false alarms when blind
    let sigma = 0.3;
    let clean = GuardedEvaluator { spec: spec.clone() };
    let biased = LabelBiasedEvaluator { inner: clean.clone(), biased_label: "baseline".into(), shift: 0.5 * sigma };
    let w = Artifact::text("x", text);
    let mut detected = 0;
    for i in 0..200 {
        let r = lib(placebo_test(&biased, &w, ("ours", "baseline"), 200, 0.95, &mut stream(515, i)))?;
        detected += usize::from(r.verdict == PlaceboVerdict::AbViolationDetected);
    }
    let power = detected as f64 / 200.0;
    let audits = 2000u64;
    let mut alarms = 0;
    for i in 0..audits {
        let r = lib(placebo_test(&clean, &w, ("ours", "baseline"), 200, 0.95, &mut stream(616, i)))?;
        alarms += u64::from(r.verdict == PlaceboVerdict::AbViolationDetected);
    }
    let fa = alarms as f64 / audits as f64;
    let fa_ok = fa <= 0.05 + 3.0 * binomial_se(0.05, audits);
    ensure(
        reproducible && worst_z <= 4.0 && power >= 0.9 && fa_ok,
        format!(
            "deterministic distinct values {}, max provenance z {worst_z:.2}, placebo power {power:.3}, false alarms {fa:.4} (nominal 0.05)",
            bits.len()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("counterexample reproduction", counterexample),
        ("transcript-law audit sufficiency", jpc_sufficiency),
        ("gaussian KL oracle", kl_oracle),
        ("misranking bound dominance", misrank_dominance),
        ("planner arithmetic", planner),
        ("discriminability recovery", kappa_recovery),
        ("prompt-edit workflow", workflow),
        ("edit-distance oracle", edit_distance_oracle_check),
        ("hygiene properties", hygiene),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| f == &id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let result = run();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {id} PASS  {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id} FAIL  {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Building benchmarks, running single calls, and estimating Q(.|w).
//!
//! With a directory argument, also writes the two XOR benchmarks as JSON
//! (`xor_b.json`, `xor_b_prime.json`) for use with the CLI.

use benchlab::channel::{
    estimate_kernel, evaluate_once, xor_pair_benchmark, Aggregator, Artifact, BenchmarkSpec, MicroInstrument,
    PanelDistribution,
};
use benchlab::rng::seeded;

pub fn run_example() -> benchlab::Result<()> {
    let b = xor_pair_benchmark([0.1, 0.4], false)?;
    let b_flip = xor_pair_benchmark([0.1, 0.4], true)?;
    let mut rng = seeded(11);

    let raw = evaluate_once(&b, &Artifact::label("1"), &mut rng)?;
    println!("one call on w=1: votes {:?} -> score {}", raw.micro_responses, raw.aggregate);

    // the two benchmarks differ at the vote level but agree on the score law
    for w in ["0", "1"] {
        let k = estimate_kernel(&b, &Artifact::label(w), 50_000, &mut rng)?;
        let k2 = estimate_kernel(&b_flip, &Artifact::label(w), 50_000, &mut rng)?;
        println!("Q(1|{w}): B {:.4}  B' {:.4}", k.frequency(1.0), k2.frequency(1.0));
    }

    // a five-rater categorical panel voting pass/fail, majority wins
    let rater_bias = [0.55, 0.6, 0.7, 0.8, 0.5];
    let panel = BenchmarkSpec::new(
        PanelDistribution::FiniteCategorical { probs: vec![0.2; 5], descriptors: (0..5).map(|i| format!("rater {i}")).collect() },
        MicroInstrument::TableLookup {
            entries: rater_bias
                .iter()
                .enumerate()
                .map(|(member, p)| benchlab::channel::TableEntry {
                    member,
                    artifact: "draft".into(),
                    law: benchlab::channel::ResponseLaw::Bernoulli { p: *p },
                })
                .collect(),
        },
        Aggregator::Majority,
        5,
    )?;
    let k = estimate_kernel(&panel, &Artifact::label("draft"), 20_000, &mut rng)?;
    println!("majority-of-5 pass rate for \"draft\": {:.4} (version {})", k.mean, panel.version);

    Ok(())
}

#[allow(dead_code)]
fn main() -> benchlab::Result<()> {
    run_example()?;
    if let Some(dir) = std::env::args().nth(1) {
        std::fs::write(format!("{dir}/xor_b.json"), xor_pair_benchmark([0.1, 0.4], false)?.to_json())?;
        std::fs::write(format!("{dir}/xor_b_prime.json"), xor_pair_benchmark([0.1, 0.4], true)?.to_json())?;
        println!("wrote specs to {dir}");
    }
    Ok(())
}

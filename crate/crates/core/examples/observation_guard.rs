//! What a method sees, and how deterministic mode pins the score of a prompt.

use benchlab::channel::{gaussian_benchmark, xor_pair_benchmark, Artifact};
use benchlab::guard::{canonicalize, derive_seed, guarded_evaluate, EvaluationMode, ObservationPolicy};
use benchlab::rng::seeded;

pub fn run_example() -> benchlab::Result<()> {
    let b = xor_pair_benchmark([0.1, 0.4], false)?;
    let mut rng = seeded(5);
    for policy in [ObservationPolicy::AggregateOnly, ObservationPolicy::LeakRawVotes, ObservationPolicy::LeakPanelIds] {
        let obs = guarded_evaluate(&b, &Artifact::label("1"), &EvaluationMode::fresh(), policy, &mut rng)?;
        println!("{:<15} {}", policy.name(), serde_json::to_string(&obs)?);
    }

    // two spellings of the same instructions, one tagged with its author
    let a = Artifact::text("mine", "- Be *concise*\n- Cite   sources").with_provenance("author", "team-a");
    let b2 = Artifact::text("theirs", "1. be concise\n2. cite sources");
    let (ca, cb) = (canonicalize(&a)?, canonicalize(&b2)?);
    println!("canonical: {:?}  same hash: {}", ca.normalized_text, ca.content_hash == cb.content_hash);
    println!("seed under v1: {:#018x}", derive_seed(&ca, "v1"));

    let spec = gaussian_benchmark([(ca.normalized_text.clone(), 0.6)], 0.2)?;
    let mode = EvaluationMode::deterministic("v1");
    let sa = guarded_evaluate(&spec, &a, &mode, ObservationPolicy::AggregateOnly, &mut rng)?.aggregate;
    let sb = guarded_evaluate(&spec, &b2, &mode, ObservationPolicy::AggregateOnly, &mut rng)?.aggregate;
    println!("deterministic scores: {sa:.6} {sb:.6}");
    assert_eq!(sa, sb);
    Ok(())
}

#[allow(dead_code)]
fn main() -> benchlab::Result<()> {
    run_example()
}

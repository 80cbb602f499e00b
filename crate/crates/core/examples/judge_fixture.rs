//! A benchmark whose instrument is an external judge, run against recorded
//! responses. Set BENCHLAB_JUDGE_URL and swap in `HttpJudge` for a live one.

use std::collections::BTreeMap;

use benchlab::channel::{evaluate_with_judge, Aggregator, Artifact, BenchmarkSpec, MicroInstrument, PanelDistribution};
use benchlab::judge::{FixtureJudge, JudgeEndpointBinding};
use benchlab::rng::seeded;

pub fn run_example() -> benchlab::Result<()> {
    let personas = vec!["novice reader".to_string(), "domain expert".to_string()];
    let spec = BenchmarkSpec::new(
        PanelDistribution::FiniteCategorical { probs: vec![0.5, 0.5], descriptors: personas.clone() },
        MicroInstrument::ExternalJudge { binding: JudgeEndpointBinding::new("http://127.0.0.1:8080") },
        Aggregator::Mean,
        3,
    )?;
    let judge = FixtureJudge::PerPersona(BTreeMap::from([(personas[0].clone(), 0.9), (personas[1].clone(), 0.4)]));
    let w = Artifact::text("summary", "1. Lead with the result\n2. Keep it under 100 words");
    let mut rng = seeded(4);
    for _ in 0..4 {
        let raw = evaluate_with_judge(&spec, &w, &mut rng, Some(&judge))?;
        println!("panel {:?} -> scores {:?} -> {:.3}", raw.panel_draws, raw.micro_responses, raw.aggregate);
    }
    match evaluate_with_judge(&spec, &w, &mut rng, None) {
        Err(e) => println!("without a client: {} ({})", e, e.category()),
        Ok(_) => unreachable!("external judge needs a backend"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> benchlab::Result<()> {
    run_example()
}

//! Does swapping the benchmark change anything the method could notice?
//! Under aggregate-only observation the XOR pair passes; leak the votes and
//! the two-round distinguisher separates them.

use std::collections::BTreeMap;

use benchlab::agents::Agent;
use benchlab::channel::{xor_pair_benchmark, Artifact, ResponseLaw};
use benchlab::guard::ObservationPolicy;
use benchlab::jpc::{build_canonical_pair, compare_transcript_laws, is_literal_panel_change};
use benchlab::rng::seeded;

pub fn run_example() -> benchlab::Result<()> {
    let b = xor_pair_benchmark([0.1, 0.4], false)?;
    let b_flip = xor_pair_benchmark([0.1, 0.4], true)?;
    let mut rng = seeded(9);

    let fixed = Agent::fixed(vec![Artifact::label("0"), Artifact::label("1")]);
    let safe = compare_transcript_laws(&fixed, &b, &b_flip, ObservationPolicy::AggregateOnly, 2, 20_000, 0.01, &mut rng)?;
    print!("{}", safe.render());

    let leak = Agent::xor_leak_distinguisher();
    let leaky = compare_transcript_laws(&leak, &b, &b_flip, ObservationPolicy::LeakRawVotes, 2, 20_000, 0.01, &mut rng)?;
    print!("{}", leaky.render());

    // any two kernels on the same artifacts can be realized by one instrument
    // with a literal panel swap
    let q: BTreeMap<String, ResponseLaw> =
        [("x".into(), ResponseLaw::Bernoulli { p: 0.3 }), ("y".into(), ResponseLaw::Bernoulli { p: 0.7 })].into();
    let q2: BTreeMap<String, ResponseLaw> =
        [("x".into(), ResponseLaw::Bernoulli { p: 0.35 }), ("y".into(), ResponseLaw::Bernoulli { p: 0.6 })].into();
    let pair = build_canonical_pair(&q, &q2)?;
    println!("canonical pair is a literal panel change: {}", is_literal_panel_change(&pair.spec_a, &pair.spec_b));
    Ok(())
}

#[allow(dead_code)]
fn main() -> benchlab::Result<()> {
    run_example()
}

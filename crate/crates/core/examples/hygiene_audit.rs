//! Placebo provenance and drift checks on a guarded evaluator and on two
//! deliberately broken ones.

use benchlab::audit::{drift_test, placebo_test, GuardedEvaluator, LabelBiasedEvaluator, SteppedDriftEvaluator};
use benchlab::channel::{gaussian_benchmark, Artifact};
use benchlab::rng::seeded;

pub fn run_example() -> benchlab::Result<()> {
    let spec = gaussian_benchmark([("candidate", 0.7)], 0.1)?;
    let w = Artifact::label("candidate");
    let mut rng = seeded(8);

    let clean = GuardedEvaluator { spec: spec.clone() };
    let r = placebo_test(&clean, &w, ("ours", "baseline"), 1000, 0.95, &mut rng)?;
    println!("guarded:      shift {:+.4} +/- {:.4} -> {:?}", r.shift, r.ci_halfwidth, r.verdict);

    let biased = LabelBiasedEvaluator { inner: clean.clone(), biased_label: "baseline".into(), shift: -0.05 };
    let r = placebo_test(&biased, &w, ("ours", "baseline"), 1000, 0.95, &mut rng)?;
    println!("label-biased: shift {:+.4} +/- {:.4} -> {:?}", r.shift, r.ci_halfwidth, r.verdict);

    let drifting = SteppedDriftEvaluator { inner: clean, from_slice: 3, shift: 0.03 };
    let d = drift_test(&drifting, &w, 5, 500, 0.95, &mut rng)?;
    println!("drift: max gap {:.4}, worst pair {:?} -> {:?}", d.max_pairwise_gap, d.worst_pair, d.verdict);
    Ok(())
}

#[allow(dead_code)]
fn main() -> benchlab::Result<()> {
    run_example()
}

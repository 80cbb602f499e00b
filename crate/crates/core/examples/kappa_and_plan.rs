//! From a pilot CSV to a sample-size plan.

use benchlab::discrim::{estimate_kappa, plan_samples, DiscreteMetric};
use benchlab::io::{kernels_from_records, read_pilot_records, write_pilot_records, PilotRecord};
use benchlab::rng::seeded;
use rand_distr::{Distribution, Normal};

pub fn run_example() -> benchlab::Result<()> {
    // eight prompts, pilot scores drawn around well-separated means
    let mut rng = seeded(3);
    let mut records = Vec::new();
    for (i, mu) in [0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75].iter().enumerate() {
        let noise = Normal::new(*mu, 0.2).expect("valid sd");
        for rep in 0..400 {
            records.push(PilotRecord { artifact_id: format!("prompt-{i}"), rep, score: noise.sample(&mut rng) });
        }
    }
    let mut csv = Vec::new();
    write_pilot_records(&records, &mut csv)?;
    println!("pilot csv: {} bytes, header {:?}", csv.len(), String::from_utf8_lossy(&csv).lines().next());

    let kernels = kernels_from_records(&read_pilot_records(csv.as_slice())?)?;
    let kappa = estimate_kappa(&kernels, &DiscreteMetric, 1.0, 0.05)?;
    let hard = kappa.hardest_pair().expect("pairs exist");
    println!(
        "kappa {:.5} over {} pairs; hardest pair {} vs {} (snr {:.5})",
        kappa.point, kappa.n_pairs, hard.artifact_i, hard.artifact_j, hard.snr
    );
    for delta in [0.1, 0.05, 0.01] {
        println!("delta {delta:<5} -> n {}", plan_samples(kappa.point, delta)?.n_required);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> benchlab::Result<()> {
    run_example()
}

//! Empirical misranking next to the exponential bound.

use benchlab::channel::{gaussian_benchmark, Artifact};
use benchlab::discrim::{validate_misranking, Separation};
use benchlab::rng::seeded;

pub fn run_example() -> benchlab::Result<()> {
    let spec = gaussian_benchmark([("better", 0.55), ("worse", 0.5)], 0.25)?;
    let curve = validate_misranking(
        &spec,
        &Artifact::label("better"),
        &Artifact::label("worse"),
        &[10, 25, 50, 100, 200, 400],
        3000,
        Separation::Known { delta_mu: 0.05, sigma: 0.25 },
        &mut seeded(17),
    )?;
    println!("{:>5} {:>8} {:>8}", "n", "rate", "bound");
    for p in &curve.points {
        println!("{:>5} {:>8.4} {:>8.4}", p.n, p.misrank_rate, p.bound);
    }
    println!("log-rate slope {:.5}", curve.log_slope().unwrap_or(f64::NAN));
    Ok(())
}

#[allow(dead_code)]
fn main() -> benchlab::Result<()> {
    run_example()
}

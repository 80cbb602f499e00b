//! Two benchmarks with identical score laws that an adaptive method can tell
//! apart once raw votes leak.

use benchlab::experiments::reproduce_counterexample;

pub fn run_example() -> benchlab::Result<()> {
    run(100_000)
}

fn run(episodes: u64) -> benchlab::Result<()> {
    let report = reproduce_counterexample(episodes, 2024)?;
    print!("{}", report.render());
    Ok(())
}

#[allow(dead_code)]
fn main() -> benchlab::Result<()> {
    match std::env::args().nth(1) {
        Some(n) => run(n.parse().map_err(|_| benchlab::Error::Argument(format!("bad episode count {n:?}")))?),
        None => run_example(),
    }
}

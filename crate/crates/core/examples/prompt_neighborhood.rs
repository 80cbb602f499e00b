//! Clause-level edits around a base prompt.

use benchlab::channel::Artifact;
use benchlab::guard::canonicalize;
use benchlab::prompt_space::{edit_distance, load_clause_pool, sample_neighborhood, ClauseSequence, EditSet};
use benchlab::rng::seeded;

pub fn run_example() -> benchlab::Result<()> {
    let base = canonicalize(&Artifact::text("base", "1. Answer briefly\n2. Show your work\n3. Flag uncertainty"))?;
    let pool = load_clause_pool("- Use plain language\n- Give one example\n\n- Check units\n".as_bytes())?;
    let hood = sample_neighborhood(&base, 2, 8, &EditSet::all(pool), &mut seeded(21))?;
    let base_seq = ClauseSequence::from(&base);
    for m in &hood.members {
        let seq = ClauseSequence::from(&m.canonical);
        println!("{} d={} {:?}", m.id, edit_distance(&base_seq, &seq), seq.clauses());
    }
    for w in &hood.warnings {
        println!("warning: {w}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> benchlab::Result<()> {
    run_example()
}

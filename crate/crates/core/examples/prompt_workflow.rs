//! End-to-end planning on a synthetic prompt neighborhood: sample edits of a
//! base prompt, pilot every prompt, estimate discriminability, plan n, then
//! check the plan on the hardest planted pair.

use benchlab::experiments::{prompt_edit_workflow, WorkflowConfig};

pub fn run_example() -> benchlab::Result<()> {
    let cfg = WorkflowConfig::default();
    let report = prompt_edit_workflow(&cfg)?;
    print!("{}", report.render());
    Ok(())
}

#[allow(dead_code)]
fn main() -> benchlab::Result<()> {
    run_example()
}

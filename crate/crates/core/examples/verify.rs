//! Runs the seeded invariant suite through the scenario runner and prints the
//! report as CSV.

use redstates::scenario::{self, Scenario};

fn main() -> redstates::Result<()> {
    let cfg = scenario::parse_config("dims = 2, 3\nsamples = 50\nseed = 2024\n", Some(Scenario::Verify))?;
    let report = scenario::run(&cfg)?;
    print!("{}", report.to_csv()?);
    println!("all checks passed: {}", report.all_passed());
    Ok(())
}

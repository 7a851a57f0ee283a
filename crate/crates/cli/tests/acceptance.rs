//! Runs every acceptance criterion and prints one line for each. Built
//! without the test harness so the lines always reach stdout.

use std::process::ExitCode;

use addmach::acceptance::{run_all, CRITERIA, DEFAULT_SEED};

fn main() -> ExitCode {
    let results = run_all(DEFAULT_SEED);
    assert_eq!(results.len(), CRITERIA.len());
    println!("acceptance suite, seed {DEFAULT_SEED}");
    for r in &results {
        println!("{r}");
    }
    let failed: Vec<u8> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    if failed.is_empty() {
        println!("all {} criteria passed", results.len());
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}

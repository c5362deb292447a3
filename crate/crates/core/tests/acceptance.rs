//! Runs all thirteen acceptance criteria and prints one line per criterion.

use std::process::ExitCode;
use std::time::Instant;

use supfbm::validation::{criteria_for, run_criterion, Level, ValidationOptions};

fn main() -> ExitCode {
    let opts = ValidationOptions::new(Level::Full, 7);
    let mut failed = 0;
    for id in criteria_for(Level::Full) {
        let start = Instant::now();
        let report = run_criterion(id, &opts);
        let tag = if report.passed() { "pass" } else { "FAIL" };
        println!("criterion {id:>2} {tag} ({:.1} s): {}", start.elapsed().as_secs_f64(), report.title);
        if !report.passed() {
            failed += 1;
            for c in report.checks.iter().filter(|c| !c.passed) {
                println!(
                    "    {}: measured {:e}, expected {:e}, deviation {:e} > bound {:e} {}",
                    c.label,
                    c.measured,
                    c.expected,
                    c.deviation,
                    c.bound,
                    c.note.as_deref().unwrap_or("")
                );
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

//! Acceptance gate: runs every criterion at its pinned tolerance and prints
//! one PASS/FAIL line each. Exits non-zero if any criterion fails.

use std::process::ExitCode;

use symtomo::verify::{run_verification, VerifyOptions};

fn main() -> ExitCode {
    // `cargo test -- <filter>` narrows the run to matching ids or groups.
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let opts = VerifyOptions { filter, ..VerifyOptions::default() };
    println!("acceptance suite (seed {})", opts.seed);
    let report = run_verification(&opts);
    for c in &report.criteria {
        println!("{}", c.line());
        if !c.passed {
            for k in c.checks.iter().filter(|k| !k.passed) {
                println!("       failed check: {} = {:.6e} (bound {:.1e})", k.label, k.measured, k.bound);
            }
        }
    }
    let failed = report.criteria.iter().filter(|c| !c.passed).count();
    println!("{} passed, {failed} failed", report.criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

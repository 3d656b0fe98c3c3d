//! One pass/fail line per acceptance criterion. Every suite compares exact
//! rationals; a criterion passes only if all of its suites pass within the
//! runtime budget.

use std::process::ExitCode;
use std::time::Instant;

use mirrorforge_cli::config::RunConfig;
use mirrorforge_cli::report::VerificationReport;
use mirrorforge_cli::suites::{criteria, run_suite, SuiteContext};

/// Wall-time budgets in milliseconds, by criterion.
const BUDGET_MS: [u128; 12] = [1_000, 1_000, 1_000, 5_000, 5_000, 10_000, 30_000, 60_000, 120_000, 300_000, 60_000, 60_000];

fn detail(r: &VerificationReport) -> String {
    match &r.first_failure {
        None => format!("{} ok", r.suite),
        Some(f) => format!("{} FAILED {} at order {}: {}", r.suite, f.label, f.order, f.residual),
    }
}

fn main() -> ExitCode {
    let mut failed = 0;
    for (id, (name, suites)) in criteria() {
        // a fresh context per criterion so the timing includes its own setup
        let ctx = SuiteContext::new(RunConfig::default(), None);
        let start = Instant::now();
        let reports: Vec<VerificationReport> = suites.iter().map(|s| run_suite(&ctx, s)).collect();
        let ms = start.elapsed().as_millis();
        let budget = BUDGET_MS[id as usize - 1];
        let pass = reports.iter().all(|r| r.pass) && ms < budget;
        if !pass {
            failed += 1;
        }
        let identities: usize = reports.iter().map(|r| r.identities.len()).sum();
        let details: Vec<String> = reports.iter().map(detail).collect();
        println!(
            "criterion {id:>2} {}: {name}; {identities} identities; {}; {ms} ms (budget {budget} ms)",
            if pass { "PASS" } else { "FAIL" },
            details.join(", "),
        );
        for r in &reports {
            if let Some(flags) = r.notes.get("convention_flags") {
                println!("             conventions: {flags}");
            }
        }
    }
    println!("acceptance: {} of 12 criteria pass", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! Acceptance suite: one PASS/FAIL line per numbered criterion.

use std::process::ExitCode;
use std::time::Instant;

use photonwave::selftest::{self, CheckResult, Options, Scale};

fn summarize(checks: &[CheckResult]) -> String {
    checks
        .iter()
        .map(|c| format!("{}={:.3e} (limit {:.1e})", c.name, c.value, c.limit))
        .collect::<Vec<_>>()
        .join("; ")
}

fn main() -> ExitCode {
    let full = Options {
        scale: Scale::Full,
        ..Options::default()
    };
    let mut all = true;
    for n in 1..=12 {
        let checks = selftest::criterion(n, full);
        let ok = !checks.is_empty() && checks.iter().all(|c| c.passed);
        all &= ok;
        let secs: f64 = checks.first().map_or(0.0, |c| c.seconds);
        println!(
            "{} criterion {n:>2}: {} [{secs:.1} s]",
            if ok { "PASS" } else { "FAIL" },
            summarize(&checks)
        );
        for c in checks.iter().filter(|c| !c.passed) {
            println!("      failed {}: {}", c.name, c.detail);
        }
    }

    let start = Instant::now();
    let report = selftest::run(Options::default());
    let secs = start.elapsed().as_secs_f64();
    let ok = report.passed() && secs <= 300.0;
    all &= ok;
    println!(
        "{} criterion 13: selftest {} checks, {} failed, {secs:.1} s (limit 300 s)",
        if ok { "PASS" } else { "FAIL" },
        report.checks.len(),
        report.failures().count()
    );

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

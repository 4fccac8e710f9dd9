use std::collections::BTreeMap;
use std::io::Write;

use fewmode::verify::{run_verify, Check, ToleranceProfile, SUITES};

fn out(line: String) {
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{line}").unwrap();
}

#[test]
fn acceptance() {
    let mut by_criterion: BTreeMap<u8, Vec<Check>> = BTreeMap::new();
    for suite in SUITES {
        let report = run_verify(suite, ToleranceProfile::Default).unwrap_or_else(|e| panic!("suite {suite}: {e}"));
        for check in report.checks {
            by_criterion.entry(check.criterion).or_default().push(check);
        }
    }
    let mut failed = Vec::new();
    for criterion in 1..=9u8 {
        let checks = by_criterion.get(&criterion).map(Vec::as_slice).unwrap_or(&[]);
        let passed = !checks.is_empty() && checks.iter().all(|c| c.passed);
        out(format!("criterion {criterion}: {}", if passed { "PASS" } else { "FAIL" }));
        for c in checks.iter().filter(|c| !c.passed) {
            out(format!("    failed: {} = {:e} (limit {:e})", c.name, c.value, c.limit));
        }
        if !passed {
            failed.push(criterion);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}

//! One PASS/FAIL line per acceptance criterion, written straight to stderr so
//! it shows up without `--nocapture`.

use std::io::Write;

use spiral_anchor_cli::verify::{run_one, VerifyOptions};

#[test]
fn acceptance_criteria() {
    let opts = VerifyOptions::default();
    let mut failed = Vec::new();
    for id in 1..=9 {
        let report = run_one(id, &opts);
        let mut err = std::io::stderr().lock();
        writeln!(err, "{}", report.line()).unwrap();
        err.flush().unwrap();
        if !report.pass {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

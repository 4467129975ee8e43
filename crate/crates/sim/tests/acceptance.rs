use std::io::Write;

use bwcr_sim::verify::criteria;

// Runs every criterion and writes one line per criterion to stderr directly, so the
// table shows up even when the harness captures output.
#[test]
fn acceptance() {
    let mut failed = Vec::new();
    for criterion in criteria() {
        let report = criterion.run();
        writeln!(std::io::stderr(), "{report}").unwrap();
        if !report.passed {
            failed.push(report.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

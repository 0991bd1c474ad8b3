//! Reporting helpers for the acceptance checks in `tests/acceptance.rs`.

use std::io::Write;

/// The one-line verdict printed for a criterion.
pub fn verdict_line(criterion: u32, title: &str, pass: bool, detail: &str) -> String {
    format!("ACCEPTANCE {criterion:>2} {} {title}: {detail}\n", if pass { "PASS" } else { "FAIL" })
}

/// Prints the verdict to the process's standard error, bypassing the test
/// harness capture so every line lands in the log, then asserts it.
pub fn report(criterion: u32, title: &str, pass: bool, detail: &str) {
    let _ = std::io::stderr().write_all(verdict_line(criterion, title, pass, detail).as_bytes());
    assert!(pass, "criterion {criterion} failed: {detail}");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_format() {
        assert_eq!(verdict_line(3, "x", true, "ok"), "ACCEPTANCE  3 PASS x: ok\n");
        assert_eq!(verdict_line(10, "y", false, "z"), "ACCEPTANCE 10 FAIL y: z\n");
    }
}

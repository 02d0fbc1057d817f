// Full verification of the four theorem cases with default settings,
// as `chss sweep` runs it, plus a zero-amplitude compact case which
// satisfies the mass equation but not the momentum equation.

use camassa_selfsim::emden::EmdenParams;
use camassa_selfsim::selfsim::SolutionCase;
use camassa_selfsim::suite::{run, Settings};

pub fn run_example() -> camassa_selfsim::Result<()> {
    let cases = [
        (-1, -1.0, 1.0, 1.0),
        (-1, 1.0, 1.0, -1.0),
        (1, 1.0, 1.0, 1.0),
        (1, -1.0, 1.0, -1.0),
        (1, 1.0, 0.0, 1.0),
    ];
    for (sigma, xi, alpha, a0) in cases {
        let case = SolutionCase::new(sigma, alpha, EmdenParams::new(xi, a0, 0.0)?)?;
        let report = run(&case, &Settings::default())?;
        println!(
            "case {} alpha={alpha} {:?}: {}",
            case.case_id(),
            report.reports.emden.classification,
            if report.pass { "pass" } else { "FAIL" }
        );
        for c in &report.reports.checks {
            let tag = match (c.skipped, c.pass) {
                (true, _) => "skip",
                (false, true) => "ok",
                (false, false) => "FAIL",
            };
            println!("    {tag:<4} {:<32} {}", c.name, c.detail);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> camassa_selfsim::Result<()> {
    run_example()
}

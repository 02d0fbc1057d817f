// Density at the origin near collapse: `rho(s, 0) (S - s)^{1/3}` tends to
// `alpha / (2 theta)^{1/6}`.

use camassa_selfsim::emden::{analyze, EmdenParams, DEFAULT_TOL};
use camassa_selfsim::selfsim::SolutionCase;
use camassa_selfsim::verify::rate_study;

pub fn run_example() -> camassa_selfsim::Result<()> {
    let case = SolutionCase::new(-1, 1.0, EmdenParams::new(-3.0, 1.0, 0.0)?)?;
    let (traj, report) = analyze(case.emden(), 2.0, DEFAULT_TOL)?;
    let s_collapse = report.s_collapse_numeric.unwrap_or(f64::NAN);
    let study = rate_study(&case, &traj, &report)?;

    println!("S = {s_collapse:.10}, theta = {}", report.theta);
    println!("{:>12} {:>14}", "(S - s)/S", "product");
    for r in study.samples.iter().step_by(4) {
        println!(
            "{:>12.1e} {:>14.10}",
            (s_collapse - r.s) / s_collapse,
            r.product
        );
    }
    println!("extrapolated limit {:.10}", study.limit_extrapolated);
    println!("alpha/(2 theta)^(1/6) {:.10}", study.limit_expected);
    println!(
        "max deviation over the last decade {:.2e}",
        study.final_decade_max_rel_dev
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> camassa_selfsim::Result<()> {
    run_example()
}

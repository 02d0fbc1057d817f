// Mass of the compact solutions: quadrature against `alpha^2 pi / (2 sqrt|xi|)`
// and conservation in time. Full-line cases have infinite mass.

use camassa_selfsim::emden::{analyze, EmdenParams, DEFAULT_TOL};
use camassa_selfsim::selfsim::SolutionCase;
use camassa_selfsim::suite::characteristic_time;
use camassa_selfsim::verify::{analytic_mass, mass, mass_conservation};

pub fn run_example() -> camassa_selfsim::Result<()> {
    let cases = [
        (1, 1.0, 1.0, 1.0),
        (1, 4.0, 2.0, 0.5),
        (-1, -1.0, 1.0, 1.0),
        (1, -1.0, 1.0, -1.0),
    ];
    for (sigma, xi, alpha, a0) in cases {
        let case = SolutionCase::new(sigma, alpha, EmdenParams::new(xi, a0, 0.0)?)?;
        let (traj, report) = analyze(case.emden(), 3.0, DEFAULT_TOL)?;
        let t_end = 0.9 * characteristic_time(&report);
        let times: Vec<f64> = (0..4).map(|k| t_end * k as f64 / 3.0).collect();
        let cons = mass_conservation(&case, &traj, &times)?;
        match analytic_mass(&case) {
            Some(exact) => println!(
                "case {}: mass {:.15} closed form {exact:.15} drift over [0, {t_end:.3}] {:.1e}",
                case.case_id(),
                mass(&case, &traj, 0.0)?.finite().unwrap_or(f64::NAN),
                cons.max_relative_drift.unwrap_or(f64::NAN),
            ),
            None => println!(
                "case {}: divergent (profile grows like |eta|)",
                case.case_id()
            ),
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> camassa_selfsim::Result<()> {
    run_example()
}

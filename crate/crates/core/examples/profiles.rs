// Density and velocity of the four solution families at a few times.
// Compact cases show the support edge moving with `a(3t)^{1/3}`.

use camassa_selfsim::emden::{analyze, EmdenParams, DEFAULT_TOL};
use camassa_selfsim::selfsim::{sample, support, SolutionCase};

pub fn run_example() -> camassa_selfsim::Result<()> {
    let cases = [
        (-1, -1.0, 1.0),
        (-1, 1.0, -1.0),
        (1, 1.0, 1.0),
        (1, -1.0, -1.0),
    ];
    for (sigma, xi, a0) in cases {
        let case = SolutionCase::new(sigma, 1.0, EmdenParams::new(xi, a0, 0.0)?)?;
        let (traj, _) = analyze(case.emden(), 3.0, DEFAULT_TOL)?;
        println!(
            "case {} (sigma = {sigma}, xi = {xi}, a0 = {a0})",
            case.case_id()
        );
        for t in [0.0, 0.25, 0.5] {
            let edge = support(&case, &traj, t)?
                .map_or("full line".to_owned(), |(_, xb)| format!("|x| < {xb:.4}"));
            let row: Vec<String> = [-1.0, -0.5, 0.0, 0.5, 1.0]
                .iter()
                .map(|&x| {
                    let f = sample(&case, &traj, t, x)?;
                    Ok(format!("{:7.4}/{:+.3}", f.rho, f.u))
                })
                .collect::<camassa_selfsim::Result<_>>()?;
            println!(
                "  t = {t:4}  rho/u at x = -1..1: {}   support {edge}",
                row.join(" ")
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> camassa_selfsim::Result<()> {
    run_example()
}

// Finite-difference residuals of both equations on three grid levels.
// The exact solutions leave only discretization error, which falls by a
// factor of four per halving; the dispersion coefficient has no effect.

use camassa_selfsim::emden::{integrate, EmdenParams, DEFAULT_TOL};
use camassa_selfsim::selfsim::{support, SolutionCase};
use camassa_selfsim::verify::{
    residual_mass_eq, residual_momentum_eq, ResidualOptions, ResidualReport, SpaceTimeGrid,
};

fn show(label: &str, r: &ResidualReport) {
    let norms: Vec<String> = r
        .levels
        .iter()
        .map(|l| format!("{:.3e}", l.max_residual))
        .collect();
    println!(
        "  {label:<22} max residual {}  order {:.3}",
        norms.join(" -> "),
        r.estimated_order.unwrap_or(f64::NAN)
    );
}

pub fn run_example() -> camassa_selfsim::Result<()> {
    let case = SolutionCase::new(1, 1.0, EmdenParams::new(1.0, 1.0, 0.0)?)?;
    let traj = integrate(case.emden(), 3.0, DEFAULT_TOL)?;
    let half = 0.6 * support(&case, &traj, 0.0)?.map_or(1.0, |(_, xb)| xb);
    let grid = SpaceTimeGrid::new(0.0, 0.5, 41, -half, half, 41)?;
    let opts = ResidualOptions {
        levels: 3,
        ..ResidualOptions::default()
    };

    println!("case {} on t in [0, 0.5], |x| <= {half:.3}", case.case_id());
    show("mass", &residual_mass_eq(&case, &traj, &grid, &opts)?);
    for alpha_d in [0.0, 1.0, 10.0] {
        let r = residual_momentum_eq(&case, &traj, &grid, alpha_d, &opts)?;
        show(&format!("momentum, alpha_d = {alpha_d}"), &r);
    }

    let corrupted = ResidualOptions {
        velocity_scale: 1.01,
        ..opts
    };
    show(
        "momentum, u * 1.01",
        &residual_momentum_eq(&case, &traj, &grid, 1.0, &corrupted)?,
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> camassa_selfsim::Result<()> {
    run_example()
}

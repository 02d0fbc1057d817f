// Collapse time of the scale factor, from the integrator and from the
// first-integral quadrature, for an orbit falling straight in and for one
// that first turns around.

use camassa_selfsim::emden::{analyze, EmdenParams, DEFAULT_TOL};

pub fn run_example() -> camassa_selfsim::Result<()> {
    println!(
        "{:>6} {:>6} {:>6} {:>14} {:>14} {:>10}",
        "xi", "a0", "a1", "S (ODE)", "S (quad)", "|a|_turn"
    );
    for (xi, a0, a1) in [
        (-3.0, 1.0, 0.0),
        (-3.0, -1.0, 0.0),
        (-3.0, 1.0, 1.0),
        (-1.0, 2.0, -0.5),
    ] {
        let params = EmdenParams::new(xi, a0, a1)?;
        let (traj, report) = analyze(&params, 1.0, DEFAULT_TOL)?;
        println!(
            "{xi:>6} {a0:>6} {a1:>6} {:>14.10} {:>14.10} {:>10}",
            report.s_collapse_numeric.unwrap_or(f64::NAN),
            report.s_collapse_quadrature.unwrap_or(f64::NAN),
            report.a_turning.map_or("-".into(), |a| format!("{a:.6}")),
        );
        assert_eq!(
            traj.termination(),
            camassa_selfsim::emden::Termination::Collapsed
        );
    }
    println!(
        "exact value for (-3, 1, 0): sqrt(3) pi / 4 = {:.10}",
        3f64.sqrt() * std::f64::consts::PI / 4.0
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> camassa_selfsim::Result<()> {
    run_example()
}

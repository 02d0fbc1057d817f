// Global orbits grow like `k s^{3/2}` with `k = (4 xi / 9)^{3/4}`.

use camassa_selfsim::emden::{growth_asymptote, integrate, EmdenParams, DEFAULT_TOL};

pub fn run_example() -> camassa_selfsim::Result<()> {
    for xi in [0.5, 2.25, 4.0] {
        let k = (4.0 * xi / 9.0f64).powf(0.75);
        let params = EmdenParams::new(xi, 1.0, 0.0)?;
        print!("xi = {xi:<5} k = {k:.6}   a/s^1.5:");
        for s_end in [1e1, 1e2, 1e3, 1e4] {
            let traj = integrate(&params, s_end, DEFAULT_TOL)?;
            print!("  {:.6}", growth_asymptote(&traj)?);
        }
        println!();
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> camassa_selfsim::Result<()> {
    run_example()
}

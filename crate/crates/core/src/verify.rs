//! Numerical checks of the constructed solutions: finite-difference PDE
//! residuals with observed convergence order, mass values and their
//! conservation, and the density blowup/decay rates at the origin.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::dd::{DoubleDouble, Real};
use crate::emden::{classify, collapse_time_quadrature, BlowupReport, Classification, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::quad;
use crate::selfsim::{support, ScaleFactor, SolutionCase};

/// Residual grids must stay within this fraction of the support radius.
pub const INTERIOR_FRACTION: f64 = 0.8;
/// Residual grids of collapsing solutions must end before this fraction of
/// the collapse time.
pub const COLLAPSE_MARGIN: f64 = 0.9;
pub const MIN_GRID_POINTS: usize = 5;

type Dd = DoubleDouble;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpaceTimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub nt: usize,
    pub x0: f64,
    pub x1: f64,
    pub nx: usize,
}

impl SpaceTimeGrid {
    pub fn new(t0: f64, t1: f64, nt: usize, x0: f64, x1: f64, nx: usize) -> Result<Self> {
        let finite = [t0, t1, x0, x1].iter().all(|v| v.is_finite());
        if !finite || t0 < 0.0 {
            return Err(invalid(format!(
                "grid ranges must be finite with t0 >= 0: t=[{t0}, {t1}], x=[{x0}, {x1}]"
            )));
        }
        if nt < 2 || nx < 2 {
            return Err(invalid(format!(
                "grid needs at least 2x2 nodes, got {nt}x{nx}"
            )));
        }
        if t1 <= t0 || x1 <= x0 {
            return Err(invalid("grid ranges must be increasing"));
        }
        Ok(Self {
            t0,
            t1,
            nt,
            x0,
            x1,
            nx,
        })
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / (self.nt - 1) as f64
    }

    pub fn dx(&self) -> f64 {
        (self.x1 - self.x0) / (self.nx - 1) as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt()
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.dx()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.nt).map(|i| self.t(i))
    }

    /// Same ranges with both spacings halved.
    pub fn refined(&self) -> Self {
        Self {
            nt: 2 * self.nt - 1,
            nx: 2 * self.nx - 1,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Equation {
    Mass,
    Momentum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridLevel {
    pub nt: usize,
    pub nx: usize,
    pub dt: f64,
    pub dx: f64,
    pub max_residual: f64,
    pub l2_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub eq_label: Equation,
    pub alpha_d: Option<f64>,
    /// Norms on the base (coarsest) grid.
    pub interior_max_residual: f64,
    pub interior_l2_residual: f64,
    pub levels: Vec<GridLevel>,
    /// `log2` of the max-norm ratio between the two finest levels.
    pub estimated_order: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualOptions {
    /// Number of grid levels, each halving both spacings.
    pub levels: usize,
    /// Multiplies every velocity sample; 1.0 leaves the field exact.
    pub velocity_scale: f64,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        Self {
            levels: 2,
            velocity_scale: 1.0,
        }
    }
}

/// Upper time limit for residual grids.
pub fn time_limit(case: &SolutionCase, traj: &Trajectory) -> Result<f64> {
    let horizon = traj.s_max() / 3.0;
    match classify(case.emden()) {
        Classification::Collapse => {
            let s = collapse_time_quadrature(case.emden())?;
            Ok(horizon.min(COLLAPSE_MARGIN * s / 3.0))
        }
        Classification::Global => Ok(horizon),
    }
}

/// Largest `|x|` admissible at every time of `grid`, or `None` when the
/// density is smooth on the whole line (noncompact support, or `alpha = 0`
/// where it vanishes identically).
pub fn interior_half_width(
    case: &SolutionCase,
    traj: &Trajectory,
    grid: &SpaceTimeGrid,
) -> Result<Option<f64>> {
    if !case.is_compact() || case.alpha() == 0.0 {
        return Ok(None);
    }
    let mut narrowest = f64::INFINITY;
    for t in grid.times() {
        if let Some((_, xb)) = support(case, traj, t)? {
            narrowest = narrowest.min(xb);
        }
    }
    Ok(Some(INTERIOR_FRACTION * narrowest))
}

fn check_grid(case: &SolutionCase, traj: &Trajectory, grid: &SpaceTimeGrid) -> Result<()> {
    if grid.nt < MIN_GRID_POINTS || grid.nx < MIN_GRID_POINTS {
        return Err(invalid(format!(
            "residual grid needs at least {MIN_GRID_POINTS}x{MIN_GRID_POINTS} nodes, got {}x{}",
            grid.nt, grid.nx
        )));
    }
    let t_max = time_limit(case, traj)?;
    if grid.t1 > t_max {
        return Err(invalid(format!(
            "grid reaches t = {} beyond admissible t = {t_max} (trajectory end or {COLLAPSE_MARGIN} of collapse time)",
            grid.t1
        )));
    }
    if let Some(limit) = interior_half_width(case, traj, grid)? {
        let reach = grid.x0.abs().max(grid.x1.abs()) + grid.dx();
        if reach > limit {
            return Err(invalid(format!(
                "grid reaches |x| = {reach} (with ghost nodes) beyond {INTERIOR_FRACTION} of the support radius ({limit})"
            )));
        }
    }
    Ok(())
}

/// Fields on one grid level with one ghost column on each side in `x`.
struct Sampled {
    nx: usize,
    rho: Vec<Vec<Dd>>,
    u: Vec<Vec<Dd>>,
    dt: Dd,
    dx: Dd,
}

impl Sampled {
    fn take(
        case: &SolutionCase,
        traj: &Trajectory,
        grid: &SpaceTimeGrid,
        velocity_scale: f64,
    ) -> Result<Self> {
        let dt =
            (Dd::from_f64(grid.t1) - Dd::from_f64(grid.t0)) / Dd::from_f64((grid.nt - 1) as f64);
        let dx =
            (Dd::from_f64(grid.x1) - Dd::from_f64(grid.x0)) / Dd::from_f64((grid.nx - 1) as f64);
        let x0 = Dd::from_f64(grid.x0);
        let scale_u = Dd::from_f64(velocity_scale);
        let rows: Vec<(Vec<Dd>, Vec<Dd>)> = (0..grid.nt)
            .into_par_iter()
            .map(|i| {
                let t = (Dd::from_f64(grid.t0) + dt * Dd::from_f64(i as f64)).to_f64();
                let sf = ScaleFactor::at(traj, t)?;
                let xs = (0..grid.nx + 2).map(|k| x0 + dx * Dd::from_f64(k as f64 - 1.0));
                let (rho, u) = xs
                    .map(|x| (case.density_at(sf, x), scale_u * case.velocity_at(sf, x)))
                    .unzip();
                Ok((rho, u))
            })
            .collect::<Result<_>>()?;
        let (rho, u) = rows.into_iter().unzip();
        Ok(Self {
            nx: grid.nx,
            rho,
            u,
            dt,
            dx,
        })
    }

    fn nt(&self) -> usize {
        self.rho.len()
    }

    /// Residual at interior nodes, row-major, `(nt-2) x (nx-2)` values.
    fn residual(&self, eq: Equation, sigma: f64, alpha_d: f64) -> Vec<f64> {
        let two = Dd::from_f64(2.0);
        let (dt2, dx2) = (two * self.dt, two * self.dx);
        let dxx = self.dx * self.dx;
        let ad2 = Dd::from_f64(alpha_d * alpha_d);
        let sigma = Dd::from_f64(sigma);
        // Column k of a sampled row is x index k-1; m is formed on 0..nx.
        let m: Vec<Vec<Dd>> = match eq {
            Equation::Mass => Vec::new(),
            Equation::Momentum => self
                .u
                .iter()
                .map(|row| {
                    (1..=self.nx)
                        .map(|k| row[k] - ad2 * ((row[k + 1] - two * row[k] + row[k - 1]) / dxx))
                        .collect()
                })
                .collect(),
        };
        (1..self.nt() - 1)
            .into_par_iter()
            .flat_map_iter(|i| {
                let m = &m;
                (1..self.nx - 1).map(move |j| {
                    let k = j + 1;
                    let (rho, u) = (&self.rho, &self.u);
                    let ux = (u[i][k + 1] - u[i][k - 1]) / dx2;
                    let rx = (rho[i][k + 1] - rho[i][k - 1]) / dx2;
                    let r = match eq {
                        Equation::Mass => {
                            let rt = (rho[i + 1][k] - rho[i - 1][k]) / dt2;
                            rt + u[i][k] * rx + rho[i][k] * ux
                        }
                        Equation::Momentum => {
                            let mt = (m[i + 1][j] - m[i - 1][j]) / dt2;
                            let mx = (m[i][j + 1] - m[i][j - 1]) / dx2;
                            mt + two * ux * m[i][j] + u[i][k] * mx + sigma * rho[i][k] * rx
                        }
                    };
                    r.to_f64()
                })
            })
            .collect()
    }
}

fn residual_report(
    case: &SolutionCase,
    traj: &Trajectory,
    grid: &SpaceTimeGrid,
    eq: Equation,
    alpha_d: f64,
    opts: &ResidualOptions,
) -> Result<ResidualReport> {
    if opts.levels == 0 {
        return Err(invalid("at least one grid level is required"));
    }
    if !(alpha_d.is_finite() && alpha_d >= 0.0) {
        return Err(invalid(format!(
            "dispersion coefficient must be >= 0, got {alpha_d}"
        )));
    }
    check_grid(case, traj, grid)?;

    let mut levels = Vec::with_capacity(opts.levels);
    let mut g = *grid;
    for _ in 0..opts.levels {
        let sampled = Sampled::take(case, traj, &g, opts.velocity_scale)?;
        let r = sampled.residual(eq, case.sigma() as f64, alpha_d);
        let max = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let l2 = (r.iter().map(|v| v * v).sum::<f64>() * g.dt() * g.dx()).sqrt();
        levels.push(GridLevel {
            nt: g.nt,
            nx: g.nx,
            dt: g.dt(),
            dx: g.dx(),
            max_residual: max,
            l2_residual: l2,
        });
        g = g.refined();
    }
    let estimated_order = match levels.as_slice() {
        [.., coarse, fine] if coarse.max_residual > 0.0 && fine.max_residual > 0.0 => {
            Some((coarse.max_residual / fine.max_residual).log2())
        }
        _ => None,
    };
    Ok(ResidualReport {
        eq_label: eq,
        alpha_d: (eq == Equation::Momentum).then_some(alpha_d),
        interior_max_residual: levels[0].max_residual,
        interior_l2_residual: levels[0].l2_residual,
        levels,
        estimated_order,
    })
}

/// `rho_t + u rho_x + rho u_x` with second-order central differences.
pub fn residual_mass_eq(
    case: &SolutionCase,
    traj: &Trajectory,
    grid: &SpaceTimeGrid,
    opts: &ResidualOptions,
) -> Result<ResidualReport> {
    residual_report(case, traj, grid, Equation::Mass, 0.0, opts)
}

/// `m_t + 2 u_x m + u m_x + sigma rho rho_x` with the Helmholtz form
/// `m = u - alpha_d^2 D_xx u` kept explicit.
pub fn residual_momentum_eq(
    case: &SolutionCase,
    traj: &Trajectory,
    grid: &SpaceTimeGrid,
    alpha_d: f64,
    opts: &ResidualOptions,
) -> Result<ResidualReport> {
    residual_report(case, traj, grid, Equation::Momentum, alpha_d, opts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MassValue {
    Finite(f64),
    Divergent,
}

impl MassValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            MassValue::Finite(v) => Some(v),
            MassValue::Divergent => None,
        }
    }
}

impl Serialize for MassValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MassValue::Finite(v) => s.serialize_f64(*v),
            MassValue::Divergent => s.serialize_str("divergent"),
        }
    }
}

/// `alpha^2 pi / (2 sqrt|xi|)` for compact cases.
pub fn analytic_mass(case: &SolutionCase) -> Option<f64> {
    case.is_compact()
        .then(|| case.alpha().powi(2) * PI / (2.0 * case.xi().abs().sqrt()))
}

/// `int rho(t, x) dx`. On a compact support the substitution
/// `x = x_b sin(phi)` removes the square-root edge behaviour; on the full
/// line the profile grows like `|eta|` and the mass is infinite.
pub fn mass(case: &SolutionCase, traj: &Trajectory, t: f64) -> Result<MassValue> {
    let Some((_, xb)) = support(case, traj, t)? else {
        return Ok(MassValue::Divergent);
    };
    if xb == 0.0 {
        return Ok(MassValue::Finite(0.0));
    }
    let sf = ScaleFactor::at(traj, t)?;
    let r = quad::gauss_kronrod(
        |phi: f64| case.density_at(sf, xb * phi.sin()) * xb * phi.cos(),
        -PI / 2.0,
        PI / 2.0,
        1e-15,
        1e-13,
        200,
    )?;
    Ok(MassValue::Finite(r.value))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservationReport {
    pub times: Vec<f64>,
    pub masses: Vec<f64>,
    pub analytic_mass: Option<f64>,
    pub max_relative_drift: Option<f64>,
    pub divergent: bool,
}

/// Mass at each time and the largest relative deviation from the first.
pub fn mass_conservation(
    case: &SolutionCase,
    traj: &Trajectory,
    t_list: &[f64],
) -> Result<ConservationReport> {
    if t_list.is_empty() {
        return Err(invalid("mass conservation needs at least one time"));
    }
    if !case.is_compact() {
        return Ok(ConservationReport {
            times: t_list.to_vec(),
            masses: Vec::new(),
            analytic_mass: None,
            max_relative_drift: None,
            divergent: true,
        });
    }
    let masses = t_list
        .par_iter()
        .map(|&t| Ok(mass(case, traj, t)?.finite().unwrap_or(f64::NAN)))
        .collect::<Result<Vec<f64>>>()?;
    let reference = masses[0];
    let drift = masses
        .iter()
        .map(|m| {
            let d = (m - reference).abs();
            if reference == 0.0 {
                d
            } else {
                d / reference.abs()
            }
        })
        .fold(0.0, f64::max);
    Ok(ConservationReport {
        times: t_list.to_vec(),
        masses,
        analytic_mass: analytic_mass(case),
        max_relative_drift: Some(drift),
        divergent: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateSample {
    pub s: f64,
    /// `rho(s, 0) (S - s)^{1/3}`.
    pub product: f64,
}

/// Samples of the origin density rate `rho(s, 0) (S - s)^{1/3}`.
pub fn blowup_rate(
    case: &SolutionCase,
    traj: &Trajectory,
    report: &BlowupReport,
    s_samples: &[f64],
) -> Result<Vec<RateSample>> {
    let s_collapse = match (report.classification, report.s_collapse_numeric) {
        (Classification::Collapse, Some(s)) => s,
        _ => return Err(invalid("blowup rate requires a collapsing solution")),
    };
    if case.alpha() <= 0.0 {
        return Err(invalid("blowup rate requires alpha > 0"));
    }
    s_samples
        .iter()
        .map(|&s| {
            if s >= s_collapse {
                return Err(invalid(format!(
                    "sample s = {s} not before collapse at {s_collapse}"
                )));
            }
            let sf = ScaleFactor::at(traj, s / 3.0)?;
            let rho = case.density_at(sf, 0.0);
            Ok(RateSample {
                s,
                product: rho * (s_collapse - s).cbrt(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateStudy {
    pub samples: Vec<RateSample>,
    /// `alpha / (2 theta)^{1/6}`.
    pub limit_expected: f64,
    /// Extrapolated from the two samples closest to collapse.
    pub limit_extrapolated: f64,
    /// Largest relative deviation from `limit_expected` over the last decade.
    pub final_decade_max_rel_dev: f64,
    /// Smallest sample divided by `limit_extrapolated`.
    pub min_ratio: f64,
}

/// Samples per decade of `S - s` and the number of decades approached.
const RATE_PER_DECADE: usize = 8;
const RATE_DECADES: usize = 5;

/// Rate samples at `S - s = S 10^{-1} ... S 10^{-6}` (geometric).
pub fn rate_study(
    case: &SolutionCase,
    traj: &Trajectory,
    report: &BlowupReport,
) -> Result<RateStudy> {
    let s_collapse = report
        .s_collapse_numeric
        .ok_or_else(|| invalid("blowup rate requires a collapsing solution"))?;
    let n = RATE_PER_DECADE * RATE_DECADES;
    let taus: Vec<f64> = (0..=n)
        .map(|k| s_collapse * 10f64.powf(-1.0 - k as f64 / RATE_PER_DECADE as f64))
        .collect();
    let s_samples: Vec<f64> = taus.iter().map(|tau| s_collapse - tau).collect();
    let samples = blowup_rate(case, traj, report, &s_samples)?;

    let theta = report.theta;
    if theta <= 0.0 {
        return Err(Error::InvalidEnergy(theta));
    }
    let limit_expected = case.alpha() / (2.0 * theta).powf(1.0 / 6.0);
    let (p1, p2) = (samples[n - 1].product, samples[n].product);
    let (w1, w2) = (taus[n - 1].powf(2.0 / 3.0), taus[n].powf(2.0 / 3.0));
    let limit_extrapolated = (p2 * w1 - p1 * w2) / (w1 - w2);
    let final_decade_max_rel_dev = samples[n - RATE_PER_DECADE..]
        .iter()
        .map(|r| ((r.product - limit_expected) / limit_expected).abs())
        .fold(0.0, f64::max);
    let min_ratio = samples
        .iter()
        .map(|r| r.product / limit_extrapolated)
        .fold(f64::INFINITY, f64::min);
    Ok(RateStudy {
        samples,
        limit_expected,
        limit_extrapolated,
        final_decade_max_rel_dev,
        min_ratio,
    })
}

/// `rho(t, 0)` at each requested time, for globally existing solutions.
pub fn origin_decay(case: &SolutionCase, traj: &Trajectory, t_list: &[f64]) -> Result<Vec<f64>> {
    if classify(case.emden()) != Classification::Global {
        return Err(invalid(
            "origin decay requires a globally existing solution",
        ));
    }
    t_list
        .iter()
        .map(|&t| Ok(case.density_at(ScaleFactor::at(traj, t)?, 0.0)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayStudy {
    pub times: Vec<f64>,
    pub rho0: Vec<f64>,
    /// `rho(t, 0) sqrt(t)` at the last time.
    pub sqrt_t_product: f64,
    /// `alpha / (sqrt(3) ((4 xi / 9)^{3/4})^{1/3})`.
    pub sqrt_t_limit: f64,
    pub monotone_after_turn: bool,
}

/// Origin density on a geometric time grid after the orbit has turned.
pub fn decay_study(case: &SolutionCase, traj: &Trajectory, t_end: f64) -> Result<DecayStudy> {
    // Past the turning point |a| grows monotonically.
    let t_turn = traj
        .states()
        .iter()
        .find(|st| st.a * st.a_dot > 0.0)
        .map_or(0.0, |st| st.s / 3.0);
    let t_start = t_turn.max(t_end * 1e-3).max(1e-6);
    if t_end <= t_start {
        return Err(invalid(format!(
            "decay horizon {t_end} must exceed {t_start}"
        )));
    }
    let n = 40;
    let times: Vec<f64> = (0..=n)
        .map(|k| t_start * (t_end / t_start).powf(k as f64 / n as f64))
        .collect();
    let rho0 = origin_decay(case, traj, &times)?;
    let monotone_after_turn = rho0.windows(2).all(|w| w[1] < w[0]) || case.alpha() == 0.0;
    let k = (4.0 * case.xi() / 9.0).powf(0.75);
    Ok(DecayStudy {
        sqrt_t_product: rho0[n] * times[n].sqrt(),
        sqrt_t_limit: case.alpha() / (3f64.sqrt() * k.cbrt()),
        times,
        rho0,
        monotone_after_turn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emden::{analyze, integrate, EmdenParams};

    fn case(sigma: i32, xi: f64, alpha: f64, a0: f64, a1: f64) -> SolutionCase {
        SolutionCase::new(sigma, alpha, EmdenParams::new(xi, a0, a1).unwrap()).unwrap()
    }

    fn traj_for(c: &SolutionCase, t_end: f64) -> Trajectory {
        integrate(c.emden(), 3.0 * t_end, 1e-12).unwrap()
    }

    #[test]
    fn grid_refinement_halves_spacing() {
        let g = SpaceTimeGrid::new(0.0, 1.0, 11, -2.0, 2.0, 21).unwrap();
        let r = g.refined();
        assert_eq!((r.nt, r.nx), (21, 41));
        assert!((r.dt() - g.dt() / 2.0).abs() < 1e-16);
        assert_eq!(r.x(40), 2.0);
        assert!(SpaceTimeGrid::new(0.0, 1.0, 1, 0.0, 1.0, 5).is_err());
        assert!(SpaceTimeGrid::new(-1.0, 1.0, 5, 0.0, 1.0, 5).is_err());
        assert!(SpaceTimeGrid::new(0.0, 1.0, 5, 1.0, 0.0, 5).is_err());
    }

    #[test]
    fn harness_is_exact_on_constant_state() {
        let n = 7;
        let one = Dd::from_f64(1.0);
        let zero = Dd::from_f64(0.0);
        let s = Sampled {
            nx: n,
            rho: vec![vec![one; n + 2]; n],
            u: vec![vec![zero; n + 2]; n],
            dt: Dd::from_f64(0.1),
            dx: Dd::from_f64(0.1),
        };
        assert!(s
            .residual(Equation::Mass, 1.0, 0.0)
            .iter()
            .all(|&r| r == 0.0));
        assert!(s
            .residual(Equation::Momentum, 1.0, 3.0)
            .iter()
            .all(|&r| r == 0.0));
    }

    #[test]
    fn mass_residual_second_order_case_2a() {
        let c = case(1, 1.0, 1.0, 1.0, 0.0);
        let traj = traj_for(&c, 0.6);
        let hw = 0.6 * support(&c, &traj, 0.0).unwrap().unwrap().1;
        let grid = SpaceTimeGrid::new(0.0, 0.5, 81, -hw, hw, 81).unwrap();
        let r = residual_mass_eq(&c, &traj, &grid, &ResidualOptions::default()).unwrap();
        let order = r.estimated_order.unwrap();
        assert!((order - 2.0).abs() < 0.2, "{r:?}");
        assert!(r.levels[1].max_residual < r.levels[0].max_residual);
    }

    #[test]
    fn zero_amplitude_residuals_vanish() {
        let c = case(1, 1.0, 0.0, 1.0, 0.5);
        let traj = traj_for(&c, 0.6);
        let grid = SpaceTimeGrid::new(0.0, 0.5, 9, -1.0, 1.0, 9).unwrap();
        let opts = ResidualOptions::default();
        let r = residual_mass_eq(&c, &traj, &grid, &opts).unwrap();
        assert!(r.levels.iter().all(|l| l.max_residual == 0.0));
        assert_eq!(r.estimated_order, None);
        // Without density the flow is not balanced: the momentum residual
        // converges to xi x / a^{4/3} instead of zero.
        let r = residual_momentum_eq(&c, &traj, &grid, 1.0, &opts).unwrap();
        let fine = grid.refined();
        let expected = (1..fine.nt - 1)
            .map(|i| {
                ScaleFactor::at(&traj, fine.t(i))
                    .unwrap()
                    .a
                    .abs()
                    .powf(-4.0 / 3.0)
            })
            .fold(0.0, f64::max)
            * c.xi().abs()
            * fine.x(fine.nx - 2).abs();
        let got = r.levels[1].max_residual;
        assert!(
            ((got - expected) / expected).abs() < 5e-3,
            "{got} vs {expected}"
        );
    }

    #[test]
    fn momentum_residual_ignores_dispersion() {
        let c = case(1, 1.0, 1.0, 1.0, 0.0);
        let traj = traj_for(&c, 0.6);
        let hw = 0.6 * support(&c, &traj, 0.0).unwrap().unwrap().1;
        let grid = SpaceTimeGrid::new(0.0, 0.5, 41, -hw, hw, 41).unwrap();
        let opts = ResidualOptions::default();
        let base = residual_momentum_eq(&c, &traj, &grid, 0.0, &opts).unwrap();
        for ad in [1.0, 10.0] {
            let r = residual_momentum_eq(&c, &traj, &grid, ad, &opts).unwrap();
            for (a, b) in base.levels.iter().zip(&r.levels) {
                assert!((a.max_residual - b.max_residual).abs() <= 1e-10);
            }
        }
        let order = base.estimated_order.unwrap();
        assert!((order - 2.0).abs() < 0.2, "{order}");
    }

    #[test]
    fn corrupted_velocity_breaks_convergence() {
        let c = case(1, 1.0, 1.0, 1.0, 0.0);
        let traj = traj_for(&c, 0.6);
        let hw = 0.6 * support(&c, &traj, 0.0).unwrap().unwrap().1;
        let grid = SpaceTimeGrid::new(0.0, 0.5, 41, -hw, hw, 41).unwrap();
        let opts = ResidualOptions {
            levels: 2,
            velocity_scale: 1.01,
        };
        let r = residual_momentum_eq(&c, &traj, &grid, 1.0, &opts).unwrap();
        assert!(r.estimated_order.unwrap() < 0.5, "{r:?}");
    }

    #[test]
    fn grid_preconditions() {
        let c = case(1, 1.0, 1.0, 1.0, 0.0);
        let traj = traj_for(&c, 0.6);
        let opts = ResidualOptions::default();
        let wide = SpaceTimeGrid::new(0.0, 0.5, 9, -0.95, 0.95, 9).unwrap();
        assert!(residual_mass_eq(&c, &traj, &wide, &opts).is_err());
        let late = SpaceTimeGrid::new(0.0, 0.7, 9, -0.5, 0.5, 9).unwrap();
        assert!(residual_mass_eq(&c, &traj, &late, &opts).is_err());
        let small = SpaceTimeGrid::new(0.0, 0.5, 4, -0.5, 0.5, 9).unwrap();
        assert!(residual_mass_eq(&c, &traj, &small, &opts).is_err());

        let c = case(-1, -1.0, 1.0, 1.0, 0.0);
        let (traj, _) = analyze(c.emden(), 1.0, 1e-12).unwrap();
        let s = collapse_time_quadrature(c.emden()).unwrap();
        let t_bad = 0.95 * s / 3.0;
        let g = SpaceTimeGrid::new(0.0, t_bad, 9, -0.1, 0.1, 9).unwrap();
        assert!(residual_mass_eq(&c, &traj, &g, &opts).is_err());
    }

    #[test]
    fn mass_matches_closed_form() {
        for (xi, alpha, expected) in [(1.0, 1.0, PI / 2.0), (4.0, 2.0, PI)] {
            let c = case(1, xi, alpha, 1.7, 0.2);
            let traj = traj_for(&c, 1.0);
            let m = mass(&c, &traj, 0.0).unwrap().finite().unwrap();
            assert!(((m - expected) / expected).abs() < 1e-10, "{m}");
        }
        let c = case(-1, -1.0, 1.0, 1.0, 0.0);
        let traj = traj_for(&c, 0.2);
        let m = mass(&c, &traj, 0.1).unwrap().finite().unwrap();
        assert!((m - PI / 2.0).abs() < 1e-10);
    }

    #[test]
    fn noncompact_mass_diverges() {
        let c = case(1, -1.0, 1.0, -1.0, 0.0);
        let traj = traj_for(&c, 0.2);
        assert_eq!(mass(&c, &traj, 0.0).unwrap(), MassValue::Divergent);
        let r = mass_conservation(&c, &traj, &[0.0, 0.1]).unwrap();
        assert!(r.divergent);
        assert!(r.max_relative_drift.is_none());
    }

    #[test]
    fn mass_is_conserved() {
        let c = case(1, 1.0, 1.0, 1.0, 0.0);
        let traj = traj_for(&c, 1.0);
        let r = mass_conservation(&c, &traj, &[0.0, 0.2, 0.5, 1.0]).unwrap();
        assert!(r.max_relative_drift.unwrap() <= 1e-8, "{r:?}");
        let c = case(1, 1.0, 0.0, 1.0, 0.0);
        let r = mass_conservation(&c, &traj, &[0.0, 0.5]).unwrap();
        assert_eq!(r.masses, vec![0.0, 0.0]);
    }

    #[test]
    fn blowup_rate_limit() {
        for alpha in [1.0, 2.0] {
            let c = case(-1, -3.0, alpha, 1.0, 0.0);
            let (traj, report) = analyze(c.emden(), 1.0, 1e-10).unwrap();
            let study = rate_study(&c, &traj, &report).unwrap();
            let expected = alpha / 3f64.powf(1.0 / 6.0);
            assert!((study.limit_expected - expected).abs() < 1e-14);
            assert!(study.final_decade_max_rel_dev < 0.01, "{study:?}");
            assert!(study.min_ratio > 0.5);
        }
    }

    #[test]
    fn blowup_rate_preconditions() {
        let c = case(1, 1.0, 1.0, 1.0, 0.0);
        let (traj, report) = analyze(c.emden(), 3.0, 1e-10).unwrap();
        assert!(blowup_rate(&c, &traj, &report, &[0.5]).is_err());
        let c = case(-1, -3.0, 0.0, 1.0, 0.0);
        let (traj, report) = analyze(c.emden(), 1.0, 1e-10).unwrap();
        assert!(blowup_rate(&c, &traj, &report, &[0.5]).is_err());
    }

    #[test]
    fn origin_density_decays() {
        let c = case(1, 2.25, 1.0, 1.0, 0.0);
        let traj = traj_for(&c, 2000.0);
        let study = decay_study(&c, &traj, 2000.0).unwrap();
        assert!(study.monotone_after_turn);
        let rel = (study.sqrt_t_product - study.sqrt_t_limit).abs() / study.sqrt_t_limit;
        assert!(rel < 0.01, "{study:?}");

        let c = case(1, 1.0, 0.0, 1.0, 0.0);
        let traj = traj_for(&c, 5.0);
        assert!(origin_decay(&c, &traj, &[1.0, 2.0])
            .unwrap()
            .iter()
            .all(|&r| r == 0.0));
        let c = case(-1, -1.0, 1.0, 1.0, 0.0);
        let traj = traj_for(&c, 0.2);
        assert!(origin_decay(&c, &traj, &[0.1]).is_err());
    }
}

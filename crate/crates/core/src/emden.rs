//! The scale-factor ODE `a'' = xi / (3 a^{1/3})` in similarity time `s = 3t`.
//!
//! Cube roots are real and sign-preserving and `a^{2/3}` means `|a|^{2/3}`,
//! so orbits with `a0 < 0` are exact negatives of orbits with `a0 > 0`.
//!
//! The first integral is
//!
//! ```text
//! theta = a'^2 / 2 - (xi / 2) |a|^{2/3}
//! ```
//!
//! and an orbit reaches `a = 0` in finite time exactly when `xi < 0`, or
//! when `xi > 0`, the initial slope drives `|a|` toward zero and
//! `theta >= 0` (no turning point exists before the origin).

use serde::Serialize;

use crate::dopri::{self, DenseStep, Settings, System};
use crate::error::{invalid, Error, Result};
use crate::quad;

/// Integration halts once `|a| <= STOP_FRACTION * |a0|`.
pub const STOP_FRACTION: f64 = 1e-10;
/// Default local tolerance (mixed absolute/relative).
pub const DEFAULT_TOL: f64 = 1e-10;
const STEP_FLOOR: f64 = 1e-14;
const QUAD_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmdenParams {
    pub xi: f64,
    pub a0: f64,
    pub a1: f64,
}

impl EmdenParams {
    pub fn new(xi: f64, a0: f64, a1: f64) -> Result<Self> {
        if !(xi.is_finite() && a0.is_finite() && a1.is_finite()) {
            return Err(invalid("xi, a0 and a1 must be finite"));
        }
        if xi == 0.0 {
            return Err(invalid("xi must be nonzero (xi != 0)"));
        }
        if a0 == 0.0 {
            return Err(invalid("initial value must satisfy a(0)=a0 ≠ 0"));
        }
        Ok(Self { xi, a0, a1 })
    }

    pub fn initial_state(&self) -> EmdenState {
        EmdenState {
            s: 0.0,
            a: self.a0,
            a_dot: self.a1,
        }
    }

    /// Energy constant of the orbit.
    pub fn theta(&self) -> f64 {
        energy(self, &self.initial_state())
    }

    /// Parameters of the mirrored orbit `b = -a`.
    pub fn mirrored(&self) -> Self {
        Self {
            xi: self.xi,
            a0: -self.a0,
            a1: -self.a1,
        }
    }

    /// Slope component pointing away from the origin: positive when the
    /// orbit initially moves away from `a = 0`.
    fn outward_slope(&self) -> f64 {
        self.a1 * self.a0.signum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmdenState {
    pub s: f64,
    pub a: f64,
    pub a_dot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    Collapse,
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    /// The requested end time was reached.
    Horizon,
    /// `|a|` fell below the stop threshold.
    Collapsed,
}

/// Acceleration `xi / (3 cbrt(a))`.
pub fn rhs(params: &EmdenParams, state: &EmdenState) -> Result<f64> {
    if state.a == 0.0 {
        return Err(Error::Singular);
    }
    Ok(params.xi / (3.0 * state.a.cbrt()))
}

/// First integral `a'^2/2 - (xi/2)|a|^{2/3}`.
pub fn energy(params: &EmdenParams, state: &EmdenState) -> f64 {
    0.5 * state.a_dot * state.a_dot - 0.5 * params.xi * state.a.abs().powf(2.0 / 3.0)
}

/// Finite-time collapse versus global existence.
pub fn classify(params: &EmdenParams) -> Classification {
    let collapses = params.xi < 0.0 || (params.outward_slope() < 0.0 && params.theta() >= 0.0);
    if collapses {
        Classification::Collapse
    } else {
        Classification::Global
    }
}

/// `|a|` at the orbit's turning point, if the orbit turns before
/// collapsing (maximum for `xi < 0`) or before escaping (minimum for
/// `xi > 0`).
pub fn turning_point(params: &EmdenParams) -> Option<f64> {
    let theta = params.theta();
    let turns = if params.xi < 0.0 {
        params.outward_slope() > 0.0
    } else {
        params.outward_slope() < 0.0 && theta < 0.0
    };
    turns.then(|| (-2.0 * theta / params.xi).powf(1.5))
}

/// `int_{g_lo}^{g_hi} G^2 / sqrt(theta - G^2) dG` for `0 <= g_lo <= g_hi <= sqrt(theta)`.
///
/// The integrand has an inverse square-root singularity when
/// `g_hi = sqrt(theta)`; the tanh-sinh rule handles it directly, with
/// `theta - G^2` formed from the endpoint distance to avoid cancellation.
pub fn orbit_integral(theta: f64, g_lo: f64, g_hi: f64) -> Result<f64> {
    if theta <= 0.0 {
        return Err(Error::InvalidEnergy(theta));
    }
    let root = theta.sqrt();
    if !(0.0 <= g_lo && g_lo <= g_hi && g_hi <= root) {
        return Err(invalid(format!(
            "orbit integral limits must satisfy 0 <= {g_lo} <= {g_hi} <= sqrt(theta) = {root}"
        )));
    }
    let gap = root - g_hi;
    let r = quad::tanh_sinh(
        |g, _, to_hi| {
            let d = (to_hi + gap) * (root + g);
            g * g / d.sqrt()
        },
        g_lo,
        g_hi,
        QUAD_TOL,
    )?;
    Ok(r.value)
}

/// Time for the orbit to reach `a = 0`, from the first integral
/// `ds = da / sqrt(2 theta + xi |a|^{2/3})` after the substitution
/// `G = sqrt(|xi|/2) |a|^{1/3}`. An orbit that first moves away from the
/// origin is split at its turning point.
pub fn collapse_time_quadrature(params: &EmdenParams) -> Result<f64> {
    if classify(params) != Classification::Collapse {
        return Err(Error::NoCollapse(format!(
            "xi = {}, a0 = {}, a1 = {} exists globally",
            params.xi, params.a0, params.a1
        )));
    }
    let theta = params.theta();
    let c = (0.5 * params.xi.abs()).sqrt();
    let g0 = c * params.a0.abs().cbrt();
    let scale = 3.0 / (c * c * c * std::f64::consts::SQRT_2);

    if params.xi < 0.0 {
        if theta <= 0.0 {
            return Err(Error::InvalidEnergy(theta));
        }
        let root = theta.sqrt();
        // a1 = 0 gives g0 == root up to rounding.
        let g0 = g0.min(root);
        let legs = if params.outward_slope() > 0.0 {
            orbit_integral(theta, g0, root)? + orbit_integral(theta, 0.0, root)?
        } else {
            orbit_integral(theta, 0.0, g0)?
        };
        Ok(scale * legs)
    } else {
        // Repulsive potential, inward slope and theta >= 0: no turning
        // point, integrand G^2 / sqrt(theta + G^2) is bounded.
        let r = quad::tanh_sinh(
            |g, _, _| {
                let d = theta + g * g;
                if d == 0.0 {
                    0.0
                } else {
                    g * g / d.sqrt()
                }
            },
            0.0,
            g0,
            QUAD_TOL,
        )?;
        Ok(scale * r.value)
    }
}

struct EmdenSystem {
    xi: f64,
    sign0: f64,
    stop_level: f64,
}

impl System<2> for EmdenSystem {
    fn rhs(&self, _s: f64, y: &[f64; 2]) -> Option<[f64; 2]> {
        // Any stage that reaches or crosses a = 0 invalidates the step.
        if y[0] * self.sign0 <= 0.0 || !y[0].is_finite() {
            return None;
        }
        Some([y[1], self.xi / (3.0 * y[0].cbrt())])
    }

    fn max_step(&self, y: &[f64; 2], dy: &[f64; 2]) -> f64 {
        if y[0] * dy[0] < 0.0 {
            0.5 * (y[0] / dy[0]).abs()
        } else {
            f64::INFINITY
        }
    }

    fn should_stop(&self, y: &[f64; 2]) -> bool {
        y[0].abs() <= self.stop_level
    }
}

/// Densely evaluable numerical solution of one orbit.
#[derive(Debug, Clone)]
pub struct Trajectory {
    params: EmdenParams,
    states: Vec<EmdenState>,
    dense: Vec<DenseStep<2>>,
    termination: Termination,
    tol: f64,
}

impl Trajectory {
    pub fn params(&self) -> &EmdenParams {
        &self.params
    }

    pub fn states(&self) -> &[EmdenState] {
        &self.states
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Last reliable similarity time.
    pub fn s_max(&self) -> f64 {
        self.states.last().map_or(0.0, |st| st.s)
    }

    pub fn last(&self) -> EmdenState {
        *self
            .states
            .last()
            .expect("trajectory holds the initial state")
    }

    /// State at similarity time `s`; stored nodes are returned verbatim.
    pub fn eval(&self, s: f64) -> Result<EmdenState> {
        let s_max = self.s_max();
        if !(0.0..=s_max).contains(&s) {
            return Err(Error::OutOfRange {
                requested: s,
                max: s_max,
            });
        }
        let idx = self.states.partition_point(|st| st.s < s);
        if let Some(st) = self.states.get(idx) {
            if st.s == s {
                return Ok(*st);
            }
        }
        let step = &self.dense[idx - 1];
        let [a, a_dot] = step.eval(s);
        Ok(EmdenState { s, a, a_dot })
    }

    /// Largest `|energy - theta|` over stored states, relative to the
    /// size of the terms being balanced.
    pub fn max_energy_drift(&self) -> f64 {
        let theta = self.params.theta();
        self.states
            .iter()
            .map(|st| {
                let kinetic = 0.5 * st.a_dot * st.a_dot;
                let potential = 0.5 * self.params.xi.abs() * st.a.abs().powf(2.0 / 3.0);
                let scale = (1.0 + theta.abs()).max(kinetic + potential);
                (energy(&self.params, st) - theta).abs() / scale
            })
            .fold(0.0, f64::max)
    }
}

/// Integrate the orbit to `s_end`, stopping early on approach to `a = 0`.
pub fn integrate(params: &EmdenParams, s_end: f64, tol: f64) -> Result<Trajectory> {
    if !(s_end > 0.0 && s_end.is_finite()) {
        return Err(invalid(format!("s_end must be positive, got {s_end}")));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let sys = EmdenSystem {
        xi: params.xi,
        sign0: params.a0.signum(),
        stop_level: STOP_FRACTION * params.a0.abs(),
    };
    let settings = Settings {
        rtol: tol,
        atol: tol,
        h_min: STEP_FLOOR * s_end.max(1.0),
        h_init: None,
    };
    let sol =
        dopri::integrate(&sys, 0.0, [params.a0, params.a1], s_end, &settings).map_err(|e| {
            Error::IntegrationFailure {
                last: EmdenState {
                    s: e.s,
                    a: e.y[0],
                    a_dot: e.y[1],
                },
                step: e.h,
                floor: settings.h_min,
            }
        })?;
    let states = sol
        .s
        .iter()
        .zip(&sol.y)
        .map(|(&s, y)| EmdenState {
            s,
            a: y[0],
            a_dot: y[1],
        })
        .collect();
    Ok(Trajectory {
        params: *params,
        states,
        dense: sol.dense,
        termination: if sol.stopped_by_event {
            Termination::Collapsed
        } else {
            Termination::Horizon
        },
        tol,
    })
}

/// Collapse time from an integration that halted at the stop threshold,
/// refined by the local model `|a| ~ sqrt(2 theta) (S - s)`.
pub fn detect_collapse(traj: &Trajectory) -> Option<f64> {
    if traj.termination != Termination::Collapsed {
        return None;
    }
    let last = traj.last();
    let theta = traj.params.theta();
    let speed = if theta > 0.0 {
        (2.0 * theta).sqrt()
    } else {
        last.a_dot.abs()
    };
    Some(last.s + last.a.abs() / speed)
}

/// `a(s_max) / s_max^{3/2}`, which tends to `sign(a0) (4 xi / 9)^{3/4}`
/// on escaping orbits.
pub fn growth_asymptote(traj: &Trajectory) -> Result<f64> {
    if traj.params.xi <= 0.0 {
        return Err(invalid("growth asymptote requires xi > 0"));
    }
    let last = traj.last();
    if last.s <= 0.0 {
        return Err(invalid("trajectory has no extent"));
    }
    Ok(last.a / last.s.powf(1.5))
}

/// Limit of `((S - s) / |a(s)|)^{1/3}` as `s -> S`, extrapolated from two
/// samples with the leading `(S - s)^{2/3}` correction removed.
pub fn rate_constant(traj: &Trajectory, s_collapse: f64) -> Result<f64> {
    let sample = |tau: f64| -> Result<f64> {
        let st = traj.eval(s_collapse - tau)?;
        Ok((tau / st.a.abs()).cbrt())
    };
    let (t1, t2) = (1e-3 * s_collapse, 1e-4 * s_collapse);
    let (p1, p2) = (sample(t1)?, sample(t2)?);
    let (w1, w2) = (t1.powf(2.0 / 3.0), t2.powf(2.0 / 3.0));
    Ok((p2 * w1 - p1 * w2) / (w1 - w2))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupReport {
    pub classification: Classification,
    pub theta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_collapse_numeric: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_collapse_quadrature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_turning: Option<f64>,
    /// Limit of `((S - s)/|a|)^{1/3}`; the density rate at the origin is
    /// `alpha` times this.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_limit_estimate: Option<f64>,
}

impl BlowupReport {
    pub fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        let params = traj.params();
        let classification = classify(params);
        let (numeric, quadrature, rate) = match classification {
            Classification::Collapse => {
                let numeric = detect_collapse(traj).ok_or_else(|| {
                    Error::Numerical(format!(
                        "collapse predicted but integration ended at s = {} with a = {}",
                        traj.s_max(),
                        traj.last().a
                    ))
                })?;
                let quadrature = collapse_time_quadrature(params)?;
                let rate = rate_constant(traj, numeric)?;
                (Some(numeric), Some(quadrature), Some(rate))
            }
            Classification::Global => (None, None, None),
        };
        Ok(Self {
            classification,
            theta: params.theta(),
            s_collapse_numeric: numeric,
            s_collapse_quadrature: quadrature,
            a_turning: turning_point(params),
            rate_limit_estimate: rate,
        })
    }
}

/// Integrate and summarise. Collapsing orbits are always followed to the
/// collapse, extending `s_end` if needed.
pub fn analyze(params: &EmdenParams, s_end: f64, tol: f64) -> Result<(Trajectory, BlowupReport)> {
    let horizon = match classify(params) {
        Classification::Collapse => {
            let s = collapse_time_quadrature(params)?;
            s_end.max(1.25 * s + 1.0)
        }
        Classification::Global => s_end,
    };
    let traj = integrate(params, horizon, tol)?;
    let report = BlowupReport::from_trajectory(&traj)?;
    Ok((traj, report))
}

//! The four self-similar solution families.
//!
//! ```text
//! rho(t, x) = f(eta) / a(3t)^{1/3},   u(t, x) = a'(3t) / a(3t) * x,
//! eta = x / a(3t)^{1/3},
//! f(eta) = (xi/sigma) sqrt(-(sigma/xi) eta^2 + (sigma alpha / xi)^2)
//! ```
//!
//! | case | sigma | xi  | a0  | support  |
//! |------|-------|-----|-----|----------|
//! | 1a   | -1    | < 0 | > 0 | compact  |
//! | 1b   | -1    | > 0 | < 0 | full line|
//! | 2a   | +1    | > 0 | > 0 | compact  |
//! | 2b   | +1    | < 0 | < 0 | full line|

use std::fmt;

use serde::Serialize;

use crate::dd::Real;
use crate::emden::{EmdenParams, Trajectory};
use crate::error::{invalid, Error, Result};

/// Sign table of admissible (sigma, xi, a0) patterns, quoted in diagnostics.
pub const CASE_TABLE: &str = "admissible cases: 1a (sigma=-1, xi<0, a0>0), \
1b (sigma=-1, xi>0, a0<0), 2a (sigma=+1, xi>0, a0>0), 2b (sigma=+1, xi<0, a0<0)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CaseId {
    #[serde(rename = "1a")]
    C1a,
    #[serde(rename = "1b")]
    C1b,
    #[serde(rename = "2a")]
    C2a,
    #[serde(rename = "2b")]
    C2b,
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseId::C1a => "1a",
            CaseId::C1b => "1b",
            CaseId::C2a => "2a",
            CaseId::C2b => "2b",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolutionCase {
    sigma: i32,
    alpha: f64,
    emden: EmdenParams,
    case_id: CaseId,
}

impl SolutionCase {
    pub fn new(sigma: i32, alpha: f64, emden: EmdenParams) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(invalid(format!(
                "profile amplitude alpha must be finite and >= 0, got {alpha}"
            )));
        }
        let (xi_pos, a0_pos) = (emden.xi > 0.0, emden.a0 > 0.0);
        let case_id = match (sigma, xi_pos, a0_pos) {
            (-1, false, true) => CaseId::C1a,
            (-1, true, false) => CaseId::C1b,
            (1, true, true) => CaseId::C2a,
            (1, false, false) => CaseId::C2b,
            (-1 | 1, _, _) => {
                return Err(invalid(format!(
                    "sign pattern (sigma={sigma:+}, xi={}, a0={}) matches no case; {CASE_TABLE}",
                    emden.xi, emden.a0
                )))
            }
            _ => return Err(invalid(format!("sigma must be +1 or -1, got {sigma}"))),
        };
        Ok(Self {
            sigma,
            alpha,
            emden,
            case_id,
        })
    }

    pub fn sigma(&self) -> i32 {
        self.sigma
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn emden(&self) -> &EmdenParams {
        &self.emden
    }

    pub fn case_id(&self) -> CaseId {
        self.case_id
    }

    pub fn xi(&self) -> f64 {
        self.emden.xi
    }

    /// Compact support iff `sigma * xi > 0`, equivalently `a0 > 0`.
    pub fn is_compact(&self) -> bool {
        self.emden.a0 > 0.0
    }

    /// Support half-width in `eta`, for compact cases.
    pub fn support_eta(&self) -> Option<f64> {
        self.is_compact()
            .then(|| self.alpha / self.emden.xi.abs().sqrt())
    }

    fn ratio(&self) -> f64 {
        self.emden.xi / self.sigma as f64
    }

    fn radicand<T: Real>(&self, eta: T) -> T {
        let r = T::from_f64(self.ratio());
        let amp = T::from_f64(self.alpha) / r;
        amp * amp - eta * eta / r
    }

    /// Profile `f(eta)`, zero where the radicand is negative.
    pub fn profile<T: Real>(&self, eta: T) -> T {
        let rad = self.radicand(eta);
        if rad < T::zero() {
            T::zero()
        } else {
            T::from_f64(self.ratio()) * rad.sqrt()
        }
    }

    /// `f'(eta)` from `(xi/sigma) eta + f f' = 0`.
    pub fn profile_derivative(&self, eta: f64) -> Result<f64> {
        if eta == 0.0 {
            return Ok(0.0);
        }
        let rad = self.radicand(eta);
        if rad < 0.0 {
            return Ok(0.0);
        }
        let f = self.profile(eta);
        if f == 0.0 {
            return Err(Error::BoundarySingularity(eta));
        }
        Ok(-self.ratio() * eta / f)
    }

    /// Density from the scale factor; non-negative in all four cases.
    pub fn density_at<T: Real>(&self, scale: ScaleFactor, x: T) -> T {
        let root = T::from_f64(scale.a).cbrt();
        self.profile(x / root) / root
    }

    /// Linear velocity field `(a'/a) x`.
    pub fn velocity_at<T: Real>(&self, scale: ScaleFactor, x: T) -> T {
        T::from_f64(scale.a_dot) / T::from_f64(scale.a) * x
    }
}

/// `a(3t)` and its derivative `a'(3t)` (with respect to `s`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleFactor {
    pub a: f64,
    pub a_dot: f64,
}

impl ScaleFactor {
    pub fn at(traj: &Trajectory, t: f64) -> Result<Self> {
        let st = traj.eval(3.0 * t)?;
        if st.a == 0.0 {
            return Err(Error::Singular);
        }
        Ok(Self {
            a: st.a,
            a_dot: st.a_dot,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldSample {
    pub t: f64,
    pub x: f64,
    pub rho: f64,
    pub u: f64,
}

pub fn profile(case: &SolutionCase, eta: f64) -> f64 {
    case.profile(eta)
}

pub fn profile_derivative(case: &SolutionCase, eta: f64) -> Result<f64> {
    case.profile_derivative(eta)
}

pub fn density(case: &SolutionCase, traj: &Trajectory, t: f64, x: f64) -> Result<f64> {
    Ok(case.density_at(ScaleFactor::at(traj, t)?, x))
}

pub fn velocity(case: &SolutionCase, traj: &Trajectory, t: f64, x: f64) -> Result<f64> {
    Ok(case.velocity_at(ScaleFactor::at(traj, t)?, x))
}

pub fn sample(case: &SolutionCase, traj: &Trajectory, t: f64, x: f64) -> Result<FieldSample> {
    let scale = ScaleFactor::at(traj, t)?;
    Ok(FieldSample {
        t,
        x,
        rho: case.density_at(scale, x),
        u: case.velocity_at(scale, x),
    })
}

/// `[-x_b, x_b]` for compact cases, `None` for the full line.
pub fn support(case: &SolutionCase, traj: &Trajectory, t: f64) -> Result<Option<(f64, f64)>> {
    let scale = ScaleFactor::at(traj, t)?;
    Ok(case.support_eta().map(|eta_b| {
        let xb = scale.a.cbrt() * eta_b;
        (-xb, xb)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emden::{integrate, DEFAULT_TOL};
    use proptest::prelude::*;

    fn case(sigma: i32, xi: f64, alpha: f64, a0: f64, a1: f64) -> SolutionCase {
        SolutionCase::new(sigma, alpha, EmdenParams::new(xi, a0, a1).unwrap()).unwrap()
    }

    #[test]
    fn sign_table_is_exact() {
        let valid = [
            (-1, -1.0, 1.0, CaseId::C1a),
            (-1, 1.0, -1.0, CaseId::C1b),
            (1, 1.0, 1.0, CaseId::C2a),
            (1, -1.0, -1.0, CaseId::C2b),
        ];
        for (sigma, xi, a0, id) in valid {
            assert_eq!(case(sigma, xi, 1.0, a0, 0.0).case_id(), id);
        }
        for (sigma, xi, a0) in [
            (-1, -1.0, -1.0),
            (-1, 1.0, 1.0),
            (1, 1.0, -1.0),
            (1, -1.0, 1.0),
        ] {
            let e =
                SolutionCase::new(sigma, 1.0, EmdenParams::new(xi, a0, 0.0).unwrap()).unwrap_err();
            assert!(e.to_string().contains(CASE_TABLE));
        }
        let p = EmdenParams::new(1.0, 1.0, 0.0).unwrap();
        assert!(SolutionCase::new(0, 1.0, p).is_err());
        assert!(SolutionCase::new(1, -0.5, p).is_err());
    }

    #[test]
    fn compactness_matches_case() {
        assert!(case(-1, -1.0, 1.0, 1.0, 0.0).is_compact());
        assert!(!case(-1, 1.0, 1.0, -1.0, 0.0).is_compact());
        assert!(case(1, 1.0, 1.0, 1.0, 0.0).is_compact());
        assert!(!case(1, -1.0, 1.0, -1.0, 0.0).is_compact());
    }

    #[test]
    fn profile_examples() {
        let c = case(1, 2.0, 1.5, 1.0, 0.0);
        assert!((c.profile(0.0) - 1.5).abs() < 1e-15);

        let c = case(1, 1.0, 1.0, 1.0, 0.0);
        assert_eq!(c.profile(1.0), 0.0);
        assert_eq!(c.profile(-1.0), 0.0);
        assert_eq!(c.profile(1.5), 0.0);
        assert_eq!(c.profile(-7.0), 0.0);

        let c = case(-1, 1.0, 0.0, -1.0, 0.0);
        for eta in [-2.0, -0.3, 0.0, 0.7, 4.0] {
            assert!((c.profile(eta) + f64::abs(eta)).abs() < 1e-15);
        }
    }

    #[test]
    fn profile_derivative_examples() {
        let c = case(1, 1.0, 1.0, 1.0, 0.0);
        assert_eq!(c.profile_derivative(0.0).unwrap(), 0.0);
        let near = c.profile_derivative(1.0 - 1e-12).unwrap();
        assert!(near < -1e5);
        assert!(c.profile_derivative(0.999).unwrap() < c.profile_derivative(0.9).unwrap());
        assert!(matches!(
            c.profile_derivative(1.0),
            Err(Error::BoundarySingularity(_))
        ));
        assert_eq!(c.profile_derivative(2.0).unwrap(), 0.0);
    }

    #[test]
    fn density_examples() {
        let c = case(1, 1.0, 1.0, 1.0, 0.0);
        let traj = integrate(c.emden(), 3.0, DEFAULT_TOL).unwrap();
        assert_eq!(density(&c, &traj, 0.0, 0.0).unwrap(), 1.0);
        assert_eq!(density(&c, &traj, 0.0, 1.2).unwrap(), 0.0);
        assert_eq!(support(&c, &traj, 0.0).unwrap(), Some((-1.0, 1.0)));

        let c = case(-1, 1.0, 1.0, -1.0, 0.0);
        let traj = integrate(c.emden(), 3.0, DEFAULT_TOL).unwrap();
        assert_eq!(density(&c, &traj, 0.0, 0.0).unwrap(), 1.0);
        assert_eq!(support(&c, &traj, 0.5).unwrap(), None);
        assert!(density(&c, &traj, 5.0, 0.0).is_err());
    }

    #[test]
    fn velocity_examples() {
        let c = case(1, 1.0, 1.0, 1.0, 0.0);
        let traj = integrate(c.emden(), 3.0, DEFAULT_TOL).unwrap();
        for x in [-2.0, 0.0, 0.5] {
            assert_eq!(velocity(&c, &traj, 0.0, x).unwrap(), 0.0);
        }
        assert_eq!(velocity(&c, &traj, 0.7, 0.0).unwrap(), 0.0);
        let g = velocity(&c, &traj, 0.7, 1.0).unwrap();
        assert!((velocity(&c, &traj, 0.7, 3.0).unwrap() - 3.0 * g).abs() < 1e-14);
    }

    #[test]
    fn strain_rate_diverges_at_collapse() {
        let c = case(-1, -3.0, 1.0, 1.0, 0.0);
        let traj = integrate(c.emden(), 2.0, DEFAULT_TOL).unwrap();
        let t_end = traj.s_max() / 3.0;
        let rates: Vec<f64> = [0.9, 0.999, 0.99999, 1.0]
            .iter()
            .map(|f| velocity(&c, &traj, f * t_end, 1.0).unwrap())
            .collect();
        assert!(rates.windows(2).all(|w| w[1] < w[0]));
        assert!(rates[3] < -1e9);
    }

    #[test]
    fn support_grows_like_sqrt_t() {
        let c = case(1, 2.25, 1.0, 1.0, 0.0);
        let traj = integrate(c.emden(), 3.0e4, DEFAULT_TOL).unwrap();
        let xb = |t| support(&c, &traj, t).unwrap().unwrap().1;
        // a ~ (3t)^{3/2} so x_b ~ sqrt(3t) * eta_b with eta_b = 1/1.5.
        let ratio = xb(1.0e4) / xb(2.5e3);
        assert!((ratio - 2.0).abs() < 0.01, "{ratio}");
    }

    fn any_case() -> impl Strategy<Value = SolutionCase> {
        (
            prop::sample::select(vec![CaseId::C1a, CaseId::C1b, CaseId::C2a, CaseId::C2b]),
            0.1f64..5.0,
            0.0f64..3.0,
            0.1f64..4.0,
            -1.0f64..1.0,
        )
            .prop_map(|(id, xi, alpha, a0, a1)| match id {
                CaseId::C1a => case(-1, -xi, alpha, a0, a1),
                CaseId::C1b => case(-1, xi, alpha, -a0, a1),
                CaseId::C2a => case(1, xi, alpha, a0, a1),
                CaseId::C2b => case(1, -xi, alpha, -a0, a1),
            })
    }

    proptest! {
        #[test]
        fn density_is_nonnegative_and_even(c in any_case(), x in -10.0f64..10.0, frac in 0.0f64..0.8) {
            let traj = integrate(c.emden(), 6.0, DEFAULT_TOL).unwrap();
            let t = frac * traj.s_max() / 3.0;
            let r = density(&c, &traj, t, x).unwrap();
            prop_assert!(r >= 0.0);
            prop_assert_eq!(r, density(&c, &traj, t, -x).unwrap());
        }

        #[test]
        fn profile_satisfies_its_ode(c in any_case(), frac in -0.999f64..0.999) {
            let eta = match c.support_eta() {
                Some(eb) => frac * eb,
                None => frac * 20.0,
            };
            let f = c.profile(eta);
            prop_assume!(f != 0.0);
            let fd = c.profile_derivative(eta).unwrap();
            let resid = c.xi() / c.sigma() as f64 * eta + f * fd;
            let scale = c.profile(0.0).powi(2).max(1.0);
            prop_assert!(resid.abs() <= 1e-12 * scale, "{}", resid);
        }

        #[test]
        fn profile_vanishes_continuously_at_edge(c in any_case(), eps in 1e-14f64..1e-6) {
            if let Some(eb) = c.support_eta() {
                let f = c.profile(eb * (1.0 - eps));
                prop_assert!(f >= 0.0);
                prop_assert!(f <= c.alpha() * (2.0 * eps).sqrt() * 1.01 + 1e-15);
                prop_assert_eq!(c.profile(eb * (1.0 + eps)), 0.0);
            }
        }

        #[test]
        fn self_similar_rescaling(c in any_case(), frac in -0.99f64..0.99, f1 in 0.0f64..0.8, f2 in 0.0f64..0.8) {
            let eta = frac * c.support_eta().unwrap_or(3.0);
            let traj = integrate(c.emden(), 6.0, DEFAULT_TOL).unwrap();
            let horizon = traj.s_max() / 3.0;
            let scaled = |t: f64| {
                let root = traj.eval(3.0 * t).unwrap().a.cbrt();
                density(&c, &traj, t, eta * root).unwrap() * root
            };
            let (r1, r2) = (scaled(f1 * horizon), scaled(f2 * horizon));
            prop_assert!((r1 - r2).abs() <= 1e-12 * (1.0 + r1.abs()), "{} vs {}", r1, r2);
        }
    }
}

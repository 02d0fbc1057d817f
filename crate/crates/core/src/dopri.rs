//! Dormand-Prince 5(4) with Hairer's fourth-order continuous extension.

/// First-order system `y' = f(s, y)` with optional step limits and a
/// terminal event.
pub trait System<const N: usize> {
    /// Right-hand side. `None` marks a state where the field cannot be
    /// evaluated; a step touching such a state is rejected and retried
    /// with a smaller step.
    fn rhs(&self, s: f64, y: &[f64; N]) -> Option<[f64; N]>;

    /// Upper bound on the next step from state `y` with slope `dy`.
    fn max_step(&self, _y: &[f64; N], _dy: &[f64; N]) -> f64 {
        f64::INFINITY
    }

    /// Terminal event, checked after every accepted step.
    fn should_stop(&self, _y: &[f64; N]) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub rtol: f64,
    pub atol: f64,
    /// Steps below this size abort the integration.
    pub h_min: f64,
    pub h_init: Option<f64>,
}

/// Continuous extension of one accepted step.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<const N: usize> {
    pub s0: f64,
    pub h: f64,
    coeffs: [[f64; 5]; N],
}

impl<const N: usize> DenseStep<N> {
    pub fn eval(&self, s: f64) -> [f64; N] {
        let th = (s - self.s0) / self.h;
        let th1 = 1.0 - th;
        let mut out = [0.0; N];
        for (o, c) in out.iter_mut().zip(&self.coeffs) {
            *o = c[0] + th * (c[1] + th1 * (c[2] + th * (c[3] + th1 * c[4])));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    pub s: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub dense: Vec<DenseStep<N>>,
    pub stopped_by_event: bool,
    pub rejected: usize,
}

#[derive(Debug, Clone)]
pub struct StepUnderflow<const N: usize> {
    pub s: f64,
    pub y: [f64; N],
    pub h: f64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

struct Trial<const N: usize> {
    y_new: [f64; N],
    k7: [f64; N],
    err: f64,
    coeffs: [[f64; 5]; N],
}

fn attempt<S: System<N>, const N: usize>(
    sys: &S,
    s: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
    cfg: &Settings,
) -> Option<Trial<N>> {
    let k2 = sys.rhs(s + C2 * h, &axpy(y, h, &[(A21, k1)]))?;
    let k3 = sys.rhs(s + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = sys.rhs(
        s + C4 * h,
        &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]),
    )?;
    let k5 = sys.rhs(
        s + C5 * h,
        &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    )?;
    let k6 = sys.rhs(
        s + h,
        &axpy(
            y,
            h,
            &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ),
    )?;
    let y_new = axpy(
        y,
        h,
        &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
    );
    let k7 = sys.rhs(s + h, &y_new)?;

    let mut sq = 0.0;
    let mut coeffs = [[0.0; 5]; N];
    for i in 0..N {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = cfg.atol + cfg.rtol * y[i].abs().max(y_new[i].abs());
        sq += (e / sc).powi(2);

        let diff = y_new[i] - y[i];
        let bspl = h * k1[i] - diff;
        coeffs[i] = [
            y[i],
            diff,
            bspl,
            diff - h * k7[i] - bspl,
            h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]),
        ];
    }
    Some(Trial {
        y_new,
        k7,
        err: (sq / N as f64).sqrt(),
        coeffs,
    })
}

/// Integrate from `(s0, y0)` to `s_end`, or until `should_stop` fires.
pub fn integrate<S: System<N>, const N: usize>(
    sys: &S,
    s0: f64,
    y0: [f64; N],
    s_end: f64,
    cfg: &Settings,
) -> Result<Solution<N>, StepUnderflow<N>> {
    let mut sol = Solution {
        s: vec![s0],
        y: vec![y0],
        dense: Vec::new(),
        stopped_by_event: false,
        rejected: 0,
    };
    let underflow = |s, y, h| StepUnderflow { s, y, h };

    let mut s = s0;
    let mut y = y0;
    let mut k1 = sys.rhs(s, &y).ok_or_else(|| underflow(s, y, 0.0))?;
    let span = s_end - s0;
    let mut h = cfg.h_init.unwrap_or(1e-3 * span.min(1.0)).min(span);

    while s < s_end {
        h = h.min(sys.max_step(&y, &k1)).min(s_end - s);
        // Avoid leaving a sliver shorter than the floor before s_end.
        if s_end - (s + h) < cfg.h_min {
            h = s_end - s;
        }
        if h < cfg.h_min {
            return Err(underflow(s, y, h));
        }
        match attempt(sys, s, &y, &k1, h, cfg) {
            Some(trial) if trial.err <= 1.0 => {
                let s_new = if h == s_end - s { s_end } else { s + h };
                sol.dense.push(DenseStep {
                    s0: s,
                    h: s_new - s,
                    coeffs: trial.coeffs,
                });
                s = s_new;
                y = trial.y_new;
                k1 = trial.k7;
                sol.s.push(s);
                sol.y.push(y);
                let fac = if trial.err == 0.0 {
                    FAC_MAX
                } else {
                    (SAFETY * trial.err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
                };
                h *= fac;
                if sys.should_stop(&y) {
                    sol.stopped_by_event = true;
                    break;
                }
            }
            Some(trial) => {
                sol.rejected += 1;
                h *= (SAFETY * trial.err.powf(-0.2)).clamp(FAC_MIN, 1.0);
            }
            None => {
                sol.rejected += 1;
                h *= 0.25;
            }
        }
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Oscillator;

    impl System<2> for Oscillator {
        fn rhs(&self, _s: f64, y: &[f64; 2]) -> Option<[f64; 2]> {
            Some([y[1], -y[0]])
        }
    }

    fn settings(tol: f64) -> Settings {
        Settings {
            rtol: tol,
            atol: tol,
            h_min: 1e-14,
            h_init: None,
        }
    }

    #[test]
    fn oscillator_endpoint_and_dense_output() {
        let sol = integrate(&Oscillator, 0.0, [1.0, 0.0], 10.0, &settings(1e-10)).unwrap();
        let (s, y) = (*sol.s.last().unwrap(), *sol.y.last().unwrap());
        assert_eq!(s, 10.0);
        assert!((y[0] - 10f64.cos()).abs() < 1e-8);
        assert!((y[1] + 10f64.sin()).abs() < 1e-8);

        let mut worst: f64 = 0.0;
        for step in &sol.dense {
            for frac in [0.17, 0.5, 0.83] {
                let t = step.s0 + frac * step.h;
                let v = step.eval(t);
                worst = worst
                    .max((v[0] - t.cos()).abs())
                    .max((v[1] + t.sin()).abs());
            }
        }
        assert!(worst < 1e-8, "dense output error {worst:e}");
    }

    #[test]
    fn dense_output_matches_nodes() {
        let sol = integrate(&Oscillator, 0.0, [1.0, 0.0], 3.0, &settings(1e-9)).unwrap();
        for (i, step) in sol.dense.iter().enumerate() {
            let at0 = step.eval(step.s0);
            assert_eq!(at0, sol.y[i]);
            let at1 = step.eval(step.s0 + step.h);
            for (v, w) in at1.iter().zip(&sol.y[i + 1]) {
                assert!((v - w).abs() <= 4.0 * f64::EPSILON);
            }
        }
    }

    #[test]
    fn fifth_order_convergence_with_tolerance() {
        // Global error should shrink roughly like tol.
        let err = |tol| {
            let sol = integrate(&Oscillator, 0.0, [1.0, 0.0], 5.0, &settings(tol)).unwrap();
            (sol.y.last().unwrap()[0] - 5f64.cos()).abs()
        };
        assert!(err(1e-6) > 10.0 * err(1e-10));
    }

    struct Wall;

    impl System<1> for Wall {
        fn rhs(&self, s: f64, _y: &[f64; 1]) -> Option<[f64; 1]> {
            (s < 0.5).then_some([1.0])
        }
    }

    #[test]
    fn unevaluable_region_underflows() {
        let r = integrate(&Wall, 0.0, [0.0], 1.0, &settings(1e-8));
        let e = r.unwrap_err();
        assert!(e.s < 0.5 && e.s > 0.49, "{}", e.s);
    }
}

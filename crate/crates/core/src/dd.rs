//! Scalar abstraction used by the field evaluators, with an `f64`
//! implementation and a double-double (~106-bit mantissa) implementation.
//!
//! Finite-difference residuals take second and third differences of
//! sampled fields. In plain `f64` the rounding of `u = g * x` alone leaves
//! O(eps / dx^2) noise in `u_xx`, which the dispersion term then amplifies.
//! Sampling in double-double pushes that floor below 1e-25.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Real:
    Copy
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    /// Real, sign-preserving cube root.
    fn cbrt(self) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn cbrt(self) -> Self {
        f64::cbrt(self)
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const fn new(v: f64) -> Self {
        Self { hi: v, lo: 0.0 }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Self { hi, lo }
    }

    fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        Self::renorm(p, e + self.lo * b)
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let (t, f) = two_sum(self.lo, rhs.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Self::renorm(s, e + f)
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (p, e) = two_prod(self.hi, rhs.hi);
        Self::renorm(p, e + (self.hi * rhs.lo + self.lo * rhs.hi))
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs.mul_f64(q1);
        let q2 = r.hi / rhs.hi;
        let r = r - rhs.mul_f64(q2);
        let q3 = r.hi / rhs.hi;
        Self::renorm(q1, q2) + Self::new(q3)
    }
}

impl PartialEq for DoubleDouble {
    fn eq(&self, other: &Self) -> bool {
        self.hi == other.hi && self.lo == other.lo
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            ord => Some(ord),
        }
    }
}

impl Real for DoubleDouble {
    fn from_f64(v: f64) -> Self {
        Self::new(v)
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Self::new(self.hi.sqrt());
        }
        // One Newton step from the f64 root doubles the precision.
        let y = Self::new(self.hi.sqrt());
        y + (self - y * y) / y.mul_f64(2.0)
    }

    fn cbrt(self) -> Self {
        if self.hi == 0.0 || !self.hi.is_finite() {
            return Self::new(self.hi.cbrt());
        }
        let y = Self::new(self.hi.cbrt());
        y - (y * y * y - self) / (y * y).mul_f64(3.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type Dd = DoubleDouble;

    #[test]
    fn third_is_accurate_beyond_f64() {
        let third = Dd::new(1.0) / Dd::new(3.0);
        let back = third * Dd::new(3.0) - Dd::new(1.0);
        assert!(back.to_f64().abs() < 1e-31);
        assert!(third.lo() != 0.0);
    }

    #[test]
    fn roots_invert_powers() {
        for &v in &[2.0, 0.37, 1e-6, 12345.678, -8.5, -0.001] {
            let x = Dd::new(v);
            let c = x.cbrt();
            let r = (c * c * c - x) / x;
            assert!(r.to_f64().abs() < 1e-30, "cbrt({v})");
            if v > 0.0 {
                let s = x.sqrt();
                let r = (s * s - x) / x;
                assert!(r.to_f64().abs() < 1e-30, "sqrt({v})");
            }
        }
        assert_eq!(Dd::new(0.0).cbrt().to_f64(), 0.0);
        assert_eq!(Dd::new(-27.0).cbrt().to_f64(), -3.0);
    }

    #[test]
    fn linear_second_difference_vanishes() {
        // g * x sampled on a uniform grid: the f64 second difference is
        // O(eps / dx^2), the double-double one is ~1e-28.
        let g = Dd::new(0.734_519_218_733_1);
        let dx = Dd::new(1.2) / Dd::new(80.0);
        let x0 = Dd::new(-0.6);
        let mut worst: f64 = 0.0;
        for j in 1..80 {
            let x = |k: i32| x0 + dx * Dd::new((j + k) as f64);
            let d2 = (g * x(1) - g * x(0) - g * x(0) + g * x(-1)) / (dx * dx);
            worst = worst.max(d2.to_f64().abs());
        }
        assert!(worst < 1e-24, "{worst}");
    }

    #[test]
    fn ordering_uses_low_word() {
        let a = Dd::new(1.0);
        let b = a + Dd::new(1e-20);
        assert!(b > a);
        assert!(-b < -a);
    }
}

//! First-order forward-mode dual numbers.
//!
//! `Dual<T>` implements `num_traits::Float`, so any routine generic over
//! [`crate::Scalar`] differentiates exactly by instantiation: seed one input
//! with unit perturbation and read the derivative off the output. Nesting
//! `Dual<Dual<f64>>` yields exact second derivatives, which is how the
//! Jacobian partials are obtained.
//!
//! Comparisons (`PartialEq`, `PartialOrd`, `min`, `max`) act on the real part
//! only, so branches taken during a dual evaluation match the plain `f64`
//! evaluation at the same point.

use num_traits::{Float, FromPrimitive, Num, NumCast, One, ToPrimitive, Zero};
use std::num::FpCategory;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

#[derive(Clone, Copy, Debug)]
pub struct Dual<T> {
    /// Value part.
    pub re: T,
    /// Derivative part.
    pub eps: T,
}

impl<T: Float> Dual<T> {
    pub fn new(re: T, eps: T) -> Self {
        Dual { re, eps }
    }

    /// Lift a constant: zero derivative.
    pub fn constant(re: T) -> Self {
        Dual { re, eps: T::zero() }
    }

    /// Seed a variable: unit derivative.
    pub fn variable(re: T) -> Self {
        Dual { re, eps: T::one() }
    }

    fn chain(re: T, outer: T, eps: T) -> Self {
        Dual {
            re,
            eps: outer * eps,
        }
    }
}

impl<T: Float> PartialEq for Dual<T> {
    fn eq(&self, other: &Self) -> bool {
        self.re == other.re
    }
}

impl<T: Float> PartialOrd for Dual<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.re.partial_cmp(&other.re)
    }
}

impl<T: Float> Add for Dual<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Dual::new(self.re + rhs.re, self.eps + rhs.eps)
    }
}

impl<T: Float> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Dual::new(self.re - rhs.re, self.eps - rhs.eps)
    }
}

impl<T: Float> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Dual::new(self.re * rhs.re, self.eps * rhs.re + self.re * rhs.eps)
    }
}

impl<T: Float> Div for Dual<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        Dual::new(
            self.re / rhs.re,
            (self.eps * rhs.re - self.re * rhs.eps) / (rhs.re * rhs.re),
        )
    }
}

impl<T: Float> Rem for Dual<T> {
    type Output = Self;
    fn rem(self, rhs: Self) -> Self {
        // a - b * trunc(a/b); the trunc factor is locally constant
        let k = (self.re / rhs.re).trunc();
        Dual::new(self.re % rhs.re, self.eps - k * rhs.eps)
    }
}

impl<T: Float> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.eps)
    }
}

impl<T: Float> Zero for Dual<T> {
    fn zero() -> Self {
        Dual::constant(T::zero())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero()
    }
}

impl<T: Float> One for Dual<T> {
    fn one() -> Self {
        Dual::constant(T::one())
    }
}

impl<T: Float> Num for Dual<T> {
    type FromStrRadixErr = T::FromStrRadixErr;
    fn from_str_radix(str: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        T::from_str_radix(str, radix).map(Dual::constant)
    }
}

impl<T: Float> ToPrimitive for Dual<T> {
    fn to_i64(&self) -> Option<i64> {
        self.re.to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.re.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        self.re.to_f64()
    }
}

impl<T: Float> NumCast for Dual<T> {
    fn from<U: ToPrimitive>(n: U) -> Option<Self> {
        T::from(n).map(Dual::constant)
    }
}

impl<T: Float> FromPrimitive for Dual<T> {
    fn from_i64(n: i64) -> Option<Self> {
        T::from(n).map(Dual::constant)
    }
    fn from_u64(n: u64) -> Option<Self> {
        T::from(n).map(Dual::constant)
    }
    // the defaults for these truncate through i64, which would destroy
    // every lifted constant
    fn from_f64(n: f64) -> Option<Self> {
        T::from(n).map(Dual::constant)
    }
    fn from_f32(n: f32) -> Option<Self> {
        T::from(n).map(Dual::constant)
    }
}

impl<T: Float> Float for Dual<T> {
    fn nan() -> Self {
        Dual::constant(T::nan())
    }
    fn infinity() -> Self {
        Dual::constant(T::infinity())
    }
    fn neg_infinity() -> Self {
        Dual::constant(T::neg_infinity())
    }
    fn neg_zero() -> Self {
        Dual::constant(T::neg_zero())
    }
    fn min_value() -> Self {
        Dual::constant(T::min_value())
    }
    fn min_positive_value() -> Self {
        Dual::constant(T::min_positive_value())
    }
    fn max_value() -> Self {
        Dual::constant(T::max_value())
    }
    fn epsilon() -> Self {
        Dual::constant(T::epsilon())
    }

    fn is_nan(self) -> bool {
        self.re.is_nan()
    }
    fn is_infinite(self) -> bool {
        self.re.is_infinite()
    }
    fn is_finite(self) -> bool {
        self.re.is_finite()
    }
    fn is_normal(self) -> bool {
        self.re.is_normal()
    }
    fn classify(self) -> FpCategory {
        self.re.classify()
    }

    fn floor(self) -> Self {
        Dual::constant(self.re.floor())
    }
    fn ceil(self) -> Self {
        Dual::constant(self.re.ceil())
    }
    fn round(self) -> Self {
        Dual::constant(self.re.round())
    }
    fn trunc(self) -> Self {
        Dual::constant(self.re.trunc())
    }
    fn fract(self) -> Self {
        Dual::new(self.re.fract(), self.eps)
    }

    fn abs(self) -> Self {
        if self.re < T::zero() {
            -self
        } else {
            self
        }
    }
    fn signum(self) -> Self {
        Dual::constant(self.re.signum())
    }
    fn is_sign_positive(self) -> bool {
        self.re.is_sign_positive()
    }
    fn is_sign_negative(self) -> bool {
        self.re.is_sign_negative()
    }

    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }
    fn recip(self) -> Self {
        Dual::new(self.re.recip(), -self.eps / (self.re * self.re))
    }

    fn powi(self, n: i32) -> Self {
        let outer = T::from(n).unwrap() * self.re.powi(n - 1);
        Dual::chain(self.re.powi(n), outer, self.eps)
    }
    fn powf(self, n: Self) -> Self {
        let v = self.re.powf(n.re);
        Dual::new(v, v * (n.eps * self.re.ln() + n.re * self.eps / self.re))
    }
    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        let two = T::one() + T::one();
        Dual::chain(r, (two * r).recip(), self.eps)
    }
    fn cbrt(self) -> Self {
        let r = self.re.cbrt();
        let three = T::from(3.0).unwrap();
        Dual::chain(r, (three * r * r).recip(), self.eps)
    }

    fn exp(self) -> Self {
        let v = self.re.exp();
        Dual::chain(v, v, self.eps)
    }
    fn exp2(self) -> Self {
        let v = self.re.exp2();
        Dual::chain(v, v * T::from(std::f64::consts::LN_2).unwrap(), self.eps)
    }
    fn exp_m1(self) -> Self {
        Dual::chain(self.re.exp_m1(), self.re.exp(), self.eps)
    }
    fn ln(self) -> Self {
        Dual::chain(self.re.ln(), self.re.recip(), self.eps)
    }
    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }
    fn log2(self) -> Self {
        let ln2 = T::from(std::f64::consts::LN_2).unwrap();
        Dual::chain(self.re.log2(), (self.re * ln2).recip(), self.eps)
    }
    fn log10(self) -> Self {
        let ln10 = T::from(std::f64::consts::LN_10).unwrap();
        Dual::chain(self.re.log10(), (self.re * ln10).recip(), self.eps)
    }
    fn ln_1p(self) -> Self {
        Dual::chain(self.re.ln_1p(), (T::one() + self.re).recip(), self.eps)
    }

    fn max(self, other: Self) -> Self {
        if self.re >= other.re {
            self
        } else {
            other
        }
    }
    fn min(self, other: Self) -> Self {
        if self.re <= other.re {
            self
        } else {
            other
        }
    }
    fn abs_sub(self, other: Self) -> Self {
        if self.re > other.re {
            self - other
        } else {
            Self::zero()
        }
    }

    fn hypot(self, other: Self) -> Self {
        let h = self.re.hypot(other.re);
        if h == T::zero() {
            return Dual::constant(h);
        }
        Dual::new(h, (self.re * self.eps + other.re * other.eps) / h)
    }

    fn sin(self) -> Self {
        Dual::chain(self.re.sin(), self.re.cos(), self.eps)
    }
    fn cos(self) -> Self {
        Dual::chain(self.re.cos(), -self.re.sin(), self.eps)
    }
    fn tan(self) -> Self {
        let c = self.re.cos();
        Dual::chain(self.re.tan(), (c * c).recip(), self.eps)
    }
    fn sin_cos(self) -> (Self, Self) {
        (self.sin(), self.cos())
    }
    fn asin(self) -> Self {
        let outer = (T::one() - self.re * self.re).sqrt().recip();
        Dual::chain(self.re.asin(), outer, self.eps)
    }
    fn acos(self) -> Self {
        let outer = -(T::one() - self.re * self.re).sqrt().recip();
        Dual::chain(self.re.acos(), outer, self.eps)
    }
    fn atan(self) -> Self {
        Dual::chain(
            self.re.atan(),
            (T::one() + self.re * self.re).recip(),
            self.eps,
        )
    }
    fn atan2(self, other: Self) -> Self {
        let denom = self.re * self.re + other.re * other.re;
        Dual::new(
            self.re.atan2(other.re),
            (other.re * self.eps - self.re * other.eps) / denom,
        )
    }

    fn sinh(self) -> Self {
        Dual::chain(self.re.sinh(), self.re.cosh(), self.eps)
    }
    fn cosh(self) -> Self {
        Dual::chain(self.re.cosh(), self.re.sinh(), self.eps)
    }
    fn tanh(self) -> Self {
        let t = self.re.tanh();
        Dual::chain(t, T::one() - t * t, self.eps)
    }
    fn asinh(self) -> Self {
        Dual::chain(
            self.re.asinh(),
            (self.re * self.re + T::one()).sqrt().recip(),
            self.eps,
        )
    }
    fn acosh(self) -> Self {
        Dual::chain(
            self.re.acosh(),
            (self.re * self.re - T::one()).sqrt().recip(),
            self.eps,
        )
    }
    fn atanh(self) -> Self {
        Dual::chain(
            self.re.atanh(),
            (T::one() - self.re * self.re).recip(),
            self.eps,
        )
    }

    fn integer_decode(self) -> (u64, i16, i8) {
        self.re.integer_decode()
    }
}

/// Derivative of a scalar function at `x`, by dual evaluation.
pub fn derivative<F>(x: f64, f: F) -> f64
where
    F: Fn(Dual<f64>) -> Dual<f64>,
{
    f(Dual::variable(x)).eps
}

//! Forward-mode dual scalar carrying derivatives with respect to a small,
//! fixed set of active parameters.
//!
//! `DScalar<P>` holds a value and `P` tangents, one per active parameter.
//! `DScalar<0>` is a plain real and is what value-only simulations use.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

/// Largest number of simultaneously active parameters.
pub const MAX_PARAMS: usize = 8;

#[derive(Clone, Copy, PartialEq)]
pub struct DScalar<const P: usize> {
    pub v: f64,
    pub d: [f64; P],
}

impl<const P: usize> fmt::Debug for DScalar<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if P == 0 {
            write!(f, "{:?}", self.v)
        } else {
            write!(f, "DScalar({:?}, {:?})", self.v, self.d)
        }
    }
}

impl<const P: usize> Default for DScalar<P> {
    fn default() -> Self {
        Self::ZERO
    }
}

impl<const P: usize> From<f64> for DScalar<P> {
    #[inline]
    fn from(v: f64) -> Self {
        Self::constant(v)
    }
}

impl<const P: usize> DScalar<P> {
    pub const ZERO: Self = Self { v: 0.0, d: [0.0; P] };
    pub const ONE: Self = Self { v: 1.0, d: [0.0; P] };

    #[inline]
    pub const fn new(v: f64, d: [f64; P]) -> Self {
        Self { v, d }
    }

    /// A value with zero tangents.
    #[inline]
    pub const fn constant(v: f64) -> Self {
        Self { v, d: [0.0; P] }
    }

    /// Seeds parameter `index` with a unit tangent.
    pub fn variable(v: f64, index: usize) -> Self {
        let mut d = [0.0; P];
        d[index] = 1.0;
        Self { v, d }
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.v
    }

    #[inline]
    pub fn grad(&self) -> [f64; P] {
        self.d
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.d.iter().all(|x| x.is_finite())
    }

    /// Applies a scalar function given its value and derivative at `self.v`.
    #[inline]
    fn chain(&self, value: f64, deriv: f64) -> Self {
        let mut d = self.d;
        for x in d.iter_mut() {
            *x *= deriv;
        }
        Self { v: value, d }
    }

    #[inline]
    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s)
    }

    #[inline]
    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c)
    }

    #[inline]
    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s)
    }

    pub fn sin_cos(self) -> (Self, Self) {
        let (s, c) = self.v.sin_cos();
        (self.chain(s, c), self.chain(c, -s))
    }

    /// Natural log. A non-positive argument yields NaN in both value and
    /// tangents so the failure survives to the loss.
    #[inline]
    pub fn ln(self) -> Self {
        if self.v <= 0.0 {
            return Self { v: f64::NAN, d: [f64::NAN; P] };
        }
        self.chain(self.v.ln(), 1.0 / self.v)
    }

    #[inline]
    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }

    #[inline]
    pub fn powi(self, n: i32) -> Self {
        self.chain(self.v.powi(n), n as f64 * self.v.powi(n - 1))
    }

    #[inline]
    pub fn square(self) -> Self {
        self * self
    }

    #[inline]
    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r)
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.v < 0.0 {
            -self
        } else {
            self
        }
    }

    /// Minimum by value; ties keep `self`, including its tangent.
    #[inline]
    pub fn min(self, other: Self) -> Self {
        if self.v <= other.v {
            self
        } else {
            other
        }
    }

    /// Maximum by value; ties keep `self`.
    #[inline]
    pub fn max(self, other: Self) -> Self {
        if self.v >= other.v {
            self
        } else {
            other
        }
    }

    /// Rebinds the tangent width. Tangents beyond the new width are dropped,
    /// missing ones are zero.
    pub fn resize<const Q: usize>(self) -> DScalar<Q> {
        let mut d = [0.0; Q];
        for (dst, src) in d.iter_mut().zip(self.d.iter()) {
            *dst = *src;
        }
        DScalar { v: self.v, d }
    }
}

/// Seeds a parameter vector: entry `i` gets the unit tangent `e_i`.
pub fn activate_params<const P: usize>(values: &[f64]) -> Result<Vec<DScalar<P>>> {
    if values.is_empty() {
        return Err(Error::EmptyParams);
    }
    if values.len() > MAX_PARAMS {
        return Err(Error::TooManyParams { count: values.len(), max: MAX_PARAMS });
    }
    if values.len() != P {
        return Err(Error::ParamCountMismatch { expected: P, got: values.len() });
    }
    Ok(values.iter().enumerate().map(|(i, &v)| DScalar::variable(v, i)).collect())
}

pub fn extract_value<const P: usize>(s: &DScalar<P>) -> f64 {
    s.v
}

pub fn extract_grad<const P: usize>(s: &DScalar<P>) -> Vec<f64> {
    s.d.to_vec()
}

impl<const P: usize> Neg for DScalar<P> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        let mut d = self.d;
        for x in d.iter_mut() {
            *x = -*x;
        }
        Self { v: -self.v, d }
    }
}

impl<const P: usize> Add for DScalar<P> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        let mut d = self.d;
        for (x, y) in d.iter_mut().zip(rhs.d.iter()) {
            *x += y;
        }
        Self { v: self.v + rhs.v, d }
    }
}

impl<const P: usize> Sub for DScalar<P> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        let mut d = self.d;
        for (x, y) in d.iter_mut().zip(rhs.d.iter()) {
            *x -= y;
        }
        Self { v: self.v - rhs.v, d }
    }
}

impl<const P: usize> Mul for DScalar<P> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let mut d = [0.0; P];
        for i in 0..P {
            d[i] = self.d[i] * rhs.v + self.v * rhs.d[i];
        }
        Self { v: self.v * rhs.v, d }
    }
}

impl<const P: usize> Div for DScalar<P> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.v;
        let v = self.v * inv;
        let mut d = [0.0; P];
        for i in 0..P {
            d[i] = (self.d[i] - v * rhs.d[i]) * inv;
        }
        Self { v, d }
    }
}

impl<const P: usize> Add<f64> for DScalar<P> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: f64) -> Self {
        Self { v: self.v + rhs, d: self.d }
    }
}

impl<const P: usize> Sub<f64> for DScalar<P> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: f64) -> Self {
        Self { v: self.v - rhs, d: self.d }
    }
}

impl<const P: usize> Mul<f64> for DScalar<P> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: f64) -> Self {
        let mut d = self.d;
        for x in d.iter_mut() {
            *x *= rhs;
        }
        Self { v: self.v * rhs, d }
    }
}

impl<const P: usize> Div<f64> for DScalar<P> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: f64) -> Self {
        self * (1.0 / rhs)
    }
}

impl<const P: usize> Add<DScalar<P>> for f64 {
    type Output = DScalar<P>;
    #[inline]
    fn add(self, rhs: DScalar<P>) -> DScalar<P> {
        rhs + self
    }
}

impl<const P: usize> Sub<DScalar<P>> for f64 {
    type Output = DScalar<P>;
    #[inline]
    fn sub(self, rhs: DScalar<P>) -> DScalar<P> {
        -rhs + self
    }
}

impl<const P: usize> Mul<DScalar<P>> for f64 {
    type Output = DScalar<P>;
    #[inline]
    fn mul(self, rhs: DScalar<P>) -> DScalar<P> {
        rhs * self
    }
}

impl<const P: usize> Div<DScalar<P>> for f64 {
    type Output = DScalar<P>;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: DScalar<P>) -> DScalar<P> {
        rhs.recip() * self
    }
}

macro_rules! assign_ops {
    ($($tr:ident $f:ident $op:tt),*) => {$(
        impl<const P: usize> $tr for DScalar<P> {
            #[inline]
            fn $f(&mut self, rhs: Self) {
                *self = *self $op rhs;
            }
        }
        impl<const P: usize> $tr<f64> for DScalar<P> {
            #[inline]
            fn $f(&mut self, rhs: f64) {
                *self = *self $op rhs;
            }
        }
    )*};
}

assign_ops!(AddAssign add_assign +, SubAssign sub_assign -, MulAssign mul_assign *, DivAssign div_assign /);

impl<const P: usize> Sum for DScalar<P> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |a, b| a + b)
    }
}

impl<'a, const P: usize> Sum<&'a DScalar<P>> for DScalar<P> {
    fn sum<I: Iterator<Item = &'a Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |a, b| a + *b)
    }
}

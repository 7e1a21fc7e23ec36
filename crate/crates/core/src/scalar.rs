//! Minimal forward-mode dual numbers.
//!
//! The Frenet step is written once over [`Real`] and evaluated either on
//! plain `f64` or on [`Dual`] to obtain its exact Jacobian.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    fn constant(v: f64) -> Self;
    fn sqrt(self) -> Self;
    fn value(self) -> f64;
}

impl Real for f64 {
    #[inline]
    fn constant(v: f64) -> Self {
        v
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
}

/// Value together with `D` directional derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<const D: usize> {
    pub re: f64,
    pub eps: [f64; D],
}

impl<const D: usize> Dual<D> {
    /// Independent variable number `slot`.
    pub fn variable(re: f64, slot: usize) -> Self {
        let mut eps = [0.0; D];
        eps[slot] = 1.0;
        Self { re, eps }
    }
}

impl<const D: usize> Add for Dual<D> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: Self) -> Self {
        self.re += rhs.re;
        for (a, b) in self.eps.iter_mut().zip(rhs.eps) {
            *a += b;
        }
        self
    }
}

impl<const D: usize> Sub for Dual<D> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        self.re -= rhs.re;
        for (a, b) in self.eps.iter_mut().zip(rhs.eps) {
            *a -= b;
        }
        self
    }
}

impl<const D: usize> Mul for Dual<D> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let mut eps = [0.0; D];
        for (k, e) in eps.iter_mut().enumerate() {
            *e = self.eps[k] * rhs.re + self.re * rhs.eps[k];
        }
        Self { re: self.re * rhs.re, eps }
    }
}

impl<const D: usize> Div for Dual<D> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.re;
        let q = self.re * inv;
        let mut eps = [0.0; D];
        for (k, e) in eps.iter_mut().enumerate() {
            *e = (self.eps[k] - q * rhs.eps[k]) * inv;
        }
        Self { re: q, eps }
    }
}

impl<const D: usize> Neg for Dual<D> {
    type Output = Self;
    #[inline]
    fn neg(mut self) -> Self {
        self.re = -self.re;
        for e in self.eps.iter_mut() {
            *e = -*e;
        }
        self
    }
}

impl<const D: usize> Add<f64> for Dual<D> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: f64) -> Self {
        self.re += rhs;
        self
    }
}

impl<const D: usize> Mul<f64> for Dual<D> {
    type Output = Self;
    #[inline]
    fn mul(mut self, rhs: f64) -> Self {
        self.re *= rhs;
        for e in self.eps.iter_mut() {
            *e *= rhs;
        }
        self
    }
}

impl<const D: usize> Real for Dual<D> {
    #[inline]
    fn constant(v: f64) -> Self {
        Self { re: v, eps: [0.0; D] }
    }

    #[inline]
    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        let scale = 0.5 / r;
        let mut eps = self.eps;
        for e in eps.iter_mut() {
            *e *= scale;
        }
        Self { re: r, eps }
    }

    #[inline]
    fn value(self) -> f64 {
        self.re
    }
}

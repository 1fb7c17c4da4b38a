//! Complex numbers carried as `mantissa * exp(log)`.
//!
//! Solutions along the imaginary ray grow like `exp(|Im sqrt(lambda)| x)`, which
//! leaves the `f64` range long before `|lambda| = 1e6`. Everything that can
//! grow that fast is returned as a [`Scaled`] value.

use num_complex::Complex64;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, PartialEq)]
pub struct Scaled {
    mant: Complex64,
    log: f64,
}

impl Scaled {
    pub const ZERO: Scaled = Scaled { mant: Complex64 { re: 0.0, im: 0.0 }, log: 0.0 };
    pub const ONE: Scaled = Scaled { mant: Complex64 { re: 1.0, im: 0.0 }, log: 0.0 };

    pub fn new(mant: Complex64, log: f64) -> Self {
        let m = mant.norm();
        if m == 0.0 || !m.is_finite() || !log.is_finite() {
            if m == 0.0 {
                return Self::ZERO;
            }
            return Scaled { mant, log };
        }
        Scaled { mant: mant / m, log: log + m.ln() }
    }

    pub fn from_c64(z: Complex64) -> Self {
        Self::new(z, 0.0)
    }

    pub fn from_f64(x: f64) -> Self {
        Self::new(Complex64::new(x, 0.0), 0.0)
    }

    /// `exp(z)` without overflow.
    pub fn exp(z: Complex64) -> Self {
        Scaled { mant: Complex64::from_polar(1.0, z.im), log: z.re }
    }

    pub fn is_zero(&self) -> bool {
        self.mant.re == 0.0 && self.mant.im == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.mant.re.is_finite() && self.mant.im.is_finite() && self.log.is_finite()
    }

    /// Natural log of the modulus; `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.log + self.mant.norm().ln()
        }
    }

    pub fn abs(&self) -> f64 {
        self.ln_abs().exp()
    }

    pub fn arg(&self) -> f64 {
        self.mant.arg()
    }

    /// Plain complex value; overflows to infinity or underflows to zero when
    /// the scale leaves the `f64` range.
    pub fn value(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        self.mant * self.log.exp()
    }

    pub fn mantissa(&self) -> Complex64 {
        self.mant
    }

    pub fn log_scale(&self) -> f64 {
        self.log
    }

    pub fn scale_c(self, z: Complex64) -> Self {
        Self::new(self.mant * z, self.log)
    }

    pub fn recip(self) -> Self {
        Self::new(self.mant.inv(), -self.log)
    }

    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::ONE;
        }
        Self::new(self.mant.powi(n), self.log * n as f64)
    }
}

impl fmt::Debug for Scaled {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} + {}i)e^{}", self.mant.re, self.mant.im, self.log)
    }
}

impl From<Complex64> for Scaled {
    fn from(z: Complex64) -> Self {
        Self::from_c64(z)
    }
}

impl From<f64> for Scaled {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl Mul for Scaled {
    type Output = Scaled;
    fn mul(self, o: Scaled) -> Scaled {
        if self.is_zero() || o.is_zero() {
            return Scaled::ZERO;
        }
        Scaled::new(self.mant * o.mant, self.log + o.log)
    }
}

impl Mul<Complex64> for Scaled {
    type Output = Scaled;
    fn mul(self, z: Complex64) -> Scaled {
        self.scale_c(z)
    }
}

impl Mul<f64> for Scaled {
    type Output = Scaled;
    fn mul(self, x: f64) -> Scaled {
        self.scale_c(Complex64::new(x, 0.0))
    }
}

impl Div for Scaled {
    type Output = Scaled;
    fn div(self, o: Scaled) -> Scaled {
        if self.is_zero() {
            return Scaled::ZERO;
        }
        Scaled::new(self.mant / o.mant, self.log - o.log)
    }
}

impl Add for Scaled {
    type Output = Scaled;
    fn add(self, o: Scaled) -> Scaled {
        if self.is_zero() {
            return o;
        }
        if o.is_zero() {
            return self;
        }
        let l = self.log.max(o.log);
        let m = self.mant * (self.log - l).exp() + o.mant * (o.log - l).exp();
        Scaled::new(m, l)
    }
}

impl Sub for Scaled {
    type Output = Scaled;
    fn sub(self, o: Scaled) -> Scaled {
        self + (-o)
    }
}

impl Neg for Scaled {
    type Output = Scaled;
    fn neg(self) -> Scaled {
        Scaled { mant: -self.mant, log: self.log }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_matches_plain_complex() {
        let a = Complex64::new(1.5, -2.0);
        let b = Complex64::new(-0.25, 3.0);
        let (sa, sb) = (Scaled::from(a), Scaled::from(b));
        assert!(((sa * sb).value() - a * b).norm() < 1e-14);
        assert!(((sa + sb).value() - (a + b)).norm() < 1e-14);
        assert!(((sa - sb).value() - (a - b)).norm() < 1e-14);
        assert!(((sa / sb).value() - a / b).norm() < 1e-14);
    }

    #[test]
    fn huge_magnitudes_do_not_overflow() {
        let big = Scaled::exp(Complex64::new(2000.0, 0.3));
        let prod = big * big;
        assert!((prod.ln_abs() - 4000.0).abs() < 1e-9);
        assert!(((prod / big).ln_abs() - 2000.0).abs() < 1e-9);
        assert!(((big - big).ln_abs()).is_infinite());
    }
}

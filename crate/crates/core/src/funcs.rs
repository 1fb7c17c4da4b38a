//! One-variable functions on `[0, L]` closed under `+`, `*`, `d/dx` and
//! `int_0^x`: exact polynomials, or Chebyshev interpolants for everything else.

use crate::expr::Expr;
use num_complex::Complex64;
use std::f64::consts::PI;

type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Chebyshev degree used for non-polynomial data.
pub const CHEB_N: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub enum Func {
    /// Coefficients in ascending powers of `x`.
    Poly(Vec<C64>),
    /// Chebyshev coefficients on `[0, len]`.
    Cheb { len: f64, coeffs: Vec<C64> },
}

fn trim(mut c: Vec<C64>) -> Vec<C64> {
    while c.last().map_or(false, |z| *z == ZERO) {
        c.pop();
    }
    c
}

/// Converts an expression to a polynomial when it is one.
pub fn to_poly(e: &Expr) -> Option<Vec<C64>> {
    let p = match e {
        Expr::Num(c) => vec![*c],
        Expr::X => vec![ZERO, C64::new(1.0, 0.0)],
        Expr::Neg(a) => to_poly(a)?.into_iter().map(|z| -z).collect(),
        Expr::Add(a, b) => poly_add(&to_poly(a)?, &to_poly(b)?),
        Expr::Sub(a, b) => poly_add(&to_poly(a)?, &to_poly(b)?.into_iter().map(|z| -z).collect::<Vec<_>>()),
        Expr::Mul(a, b) => poly_mul(&to_poly(a)?, &to_poly(b)?),
        Expr::Div(a, b) => {
            let c = b.as_constant()?;
            to_poly(a)?.into_iter().map(|z| z / c).collect()
        }
        Expr::Pow(a, n) => {
            let base = to_poly(a)?;
            (0..*n).fold(vec![C64::new(1.0, 0.0)], |acc, _| poly_mul(&acc, &base))
        }
        Expr::Call(f, a) => {
            let arg = to_poly(a)?;
            if arg.len() > 1 {
                return None;
            }
            vec![f.apply(arg.first().copied().unwrap_or(ZERO))]
        }
    };
    Some(trim(p))
}

fn poly_add(a: &[C64], b: &[C64]) -> Vec<C64> {
    let n = a.len().max(b.len());
    trim((0..n).map(|i| a.get(i).copied().unwrap_or(ZERO) + b.get(i).copied().unwrap_or(ZERO)).collect())
}

fn poly_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(out)
}

fn cheb_nodes(n: usize) -> Vec<f64> {
    (0..n).map(|k| (PI * (k as f64 + 0.5) / n as f64).cos()).collect()
}

/// First-kind Chebyshev points mapped to `[0, len]`.
pub fn cheb_points(n: usize, len: f64) -> Vec<f64> {
    cheb_nodes(n).into_iter().map(|t| 0.5 * len * (t + 1.0)).collect()
}

/// Coefficients of the interpolant through values at first-kind nodes.
fn cheb_coeffs(values: &[C64]) -> Vec<C64> {
    let n = values.len();
    (0..n)
        .map(|j| {
            let s: C64 = values
                .iter()
                .enumerate()
                .map(|(k, v)| v * (PI * j as f64 * (k as f64 + 0.5) / n as f64).cos())
                .sum();
            s * (if j == 0 { 1.0 } else { 2.0 } / n as f64)
        })
        .collect()
}

fn clenshaw(c: &[C64], t: f64) -> C64 {
    let (mut b1, mut b2) = (ZERO, ZERO);
    for &ck in c.iter().skip(1).rev() {
        let b0 = ck + b1 * (2.0 * t) - b2;
        b2 = b1;
        b1 = b0;
    }
    c.first().copied().unwrap_or(ZERO) + b1 * t - b2
}

impl Func {
    pub fn zero() -> Func {
        Func::Poly(Vec::new())
    }

    pub fn constant(c: C64) -> Func {
        Func::Poly(trim(vec![c]))
    }

    /// Samples `f` on `[0, len]`.
    pub fn cheb_from(len: f64, f: impl Fn(f64) -> C64) -> Func {
        let vals: Vec<C64> = cheb_points(CHEB_N, len).into_iter().map(f).collect();
        Func::cheb_from_values(len, &vals)
    }

    /// Interpolant through values at `cheb_points(values.len(), len)`.
    pub fn cheb_from_values(len: f64, values: &[C64]) -> Func {
        Func::Cheb { len, coeffs: cheb_coeffs(values) }
    }

    pub fn is_poly(&self) -> bool {
        matches!(self, Func::Poly(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Func::Poly(c) => c.is_empty(),
            Func::Cheb { coeffs, .. } => coeffs.iter().all(|z| *z == ZERO),
        }
    }

    pub fn eval(&self, x: f64) -> C64 {
        match self {
            Func::Poly(c) => c.iter().rev().fold(ZERO, |acc, z| acc * x + z),
            Func::Cheb { len, coeffs } => clenshaw(coeffs, 2.0 * x / len - 1.0),
        }
    }

    fn as_cheb(&self, len: f64) -> Func {
        match self {
            Func::Poly(_) => Func::cheb_from(len, |x| self.eval(x)),
            Func::Cheb { .. } => self.clone(),
        }
    }

    fn len_of(a: &Func, b: &Func) -> Option<f64> {
        match (a, b) {
            (Func::Cheb { len, .. }, _) | (_, Func::Cheb { len, .. }) => Some(*len),
            _ => None,
        }
    }

    pub fn add(&self, other: &Func) -> Func {
        match (self, other) {
            (Func::Poly(a), Func::Poly(b)) => Func::Poly(poly_add(a, b)),
            _ => {
                let len = Self::len_of(self, other).unwrap();
                let (Func::Cheb { coeffs: a, .. }, Func::Cheb { coeffs: b, .. }) = (self.as_cheb(len), other.as_cheb(len))
                else {
                    unreachable!()
                };
                let n = a.len().max(b.len());
                let c = (0..n).map(|i| a.get(i).copied().unwrap_or(ZERO) + b.get(i).copied().unwrap_or(ZERO)).collect();
                Func::Cheb { len, coeffs: c }
            }
        }
    }

    pub fn scale(&self, s: C64) -> Func {
        match self {
            Func::Poly(c) => Func::Poly(trim(c.iter().map(|z| z * s).collect())),
            Func::Cheb { len, coeffs } => Func::Cheb { len: *len, coeffs: coeffs.iter().map(|z| z * s).collect() },
        }
    }

    pub fn sub(&self, other: &Func) -> Func {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Func) -> Func {
        match (self, other) {
            (Func::Poly(a), Func::Poly(b)) => Func::Poly(poly_mul(a, b)),
            _ => {
                let len = Self::len_of(self, other).unwrap();
                Func::cheb_from(len, |x| self.eval(x) * other.eval(x))
            }
        }
    }

    pub fn derivative(&self) -> Func {
        match self {
            Func::Poly(c) => {
                Func::Poly(trim(c.iter().enumerate().skip(1).map(|(i, z)| z * i as f64).collect()))
            }
            Func::Cheb { len, coeffs } => {
                let n = coeffs.len();
                let mut d = vec![ZERO; n + 1];
                for k in (1..n).rev() {
                    d[k - 1] = d[k + 1] + coeffs[k] * (2.0 * k as f64);
                }
                d[0] *= 0.5;
                d.truncate(n);
                let s = 2.0 / len;
                Func::Cheb { len: *len, coeffs: d.into_iter().map(|z| z * s).collect() }
            }
        }
    }

    pub fn derivative_n(&self, n: usize) -> Func {
        (0..n).fold(self.clone(), |f, _| f.derivative())
    }

    /// `int_0^x f`.
    pub fn integral(&self) -> Func {
        match self {
            Func::Poly(c) => {
                let mut out = vec![ZERO];
                out.extend(c.iter().enumerate().map(|(i, z)| z / (i + 1) as f64));
                Func::Poly(trim(out))
            }
            Func::Cheb { len, coeffs } => {
                let n = coeffs.len();
                let get = |k: usize| coeffs.get(k).copied().unwrap_or(ZERO);
                let mut out = vec![ZERO; n + 1];
                for k in 1..=n {
                    let prev = if k == 1 { get(0) * 2.0 } else { get(k - 1) };
                    out[k] = (prev - get(k + 1)) / (2.0 * k as f64);
                }
                out.truncate(n);
                let s = 0.5 * len;
                let mut f = Func::Cheb { len: *len, coeffs: out.into_iter().map(|z| z * s).collect() };
                let v0 = f.eval(0.0);
                if let Func::Cheb { coeffs, .. } = &mut f {
                    coeffs[0] -= v0;
                }
                f
            }
        }
    }

    /// `f(x) - c`.
    pub fn minus_constant(&self, c: C64) -> Func {
        self.add(&Func::constant(-c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn polynomial_calculus() {
        let p = Func::Poly(to_poly(&parse("(x-1)^2").unwrap()).unwrap());
        assert_eq!(p.eval(3.0), C64::new(4.0, 0.0));
        assert_eq!(p.derivative().eval(3.0), C64::new(4.0, 0.0));
        assert!((p.integral().eval(1.0) - 1.0 / 3.0).norm() < 1e-15);
        assert!(to_poly(&parse("sin(x)").unwrap()).is_none());
        assert_eq!(to_poly(&parse("x/2 + cos(0)").unwrap()).unwrap(), vec![C64::new(1.0, 0.0), C64::new(0.5, 0.0)]);
    }

    #[test]
    fn chebyshev_calculus() {
        let f = Func::cheb_from(2.0, |x| C64::new(x.cos(), x.sin()));
        for &x in &[0.0, 0.3, 1.7, 2.0] {
            assert!((f.eval(x) - C64::new(x.cos(), x.sin())).norm() < 1e-13);
            let e = (f.derivative().eval(x) - C64::new(-x.sin(), x.cos())).norm();
            assert!(e < 1e-10, "{x} {e}");
            assert!((f.integral().eval(x) - C64::new(x.sin(), 1.0 - x.cos())).norm() < 1e-13);
        }
        let g = f.mul(&Func::Poly(vec![ZERO, C64::new(1.0, 0.0)]));
        assert!((g.eval(1.5) - C64::new(1.5 * 1.5f64.cos(), 1.5 * 1.5f64.sin())).norm() < 1e-13);
    }
}

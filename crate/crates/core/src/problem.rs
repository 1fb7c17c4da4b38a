//! Operator data: potential, boundary conditions and the jump at `d`.

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Endpoints closer than this to a tiling boundary are snapped onto it.
const TILE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub expr: Expr,
}

/// A potential on `[0, pi]`, either one expression or a tiling by pieces.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialExpr {
    source: String,
    pieces: Vec<Piece>,
}

impl PotentialExpr {
    pub fn parse(source: &str) -> Result<Self> {
        let expr = expr::parse(source)?;
        Ok(PotentialExpr { source: source.to_string(), pieces: vec![Piece { lo: 0.0, hi: PI, expr }] })
    }

    pub fn from_expr(expr: Expr) -> Self {
        PotentialExpr { source: expr.to_string(), pieces: vec![Piece { lo: 0.0, hi: PI, expr }] }
    }

    /// Builds a piecewise potential from `(lo, hi, source)` triples that must
    /// tile `[0, pi]` in increasing order.
    pub fn piecewise(parts: &[(f64, f64, &str)]) -> Result<Self> {
        let pieces = parts
            .iter()
            .map(|(lo, hi, src)| Ok(Piece { lo: *lo, hi: *hi, expr: expr::parse(src)? }))
            .collect::<Result<Vec<_>>>()?;
        Self::from_pieces(pieces)
    }

    pub fn from_pieces(mut pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = pieces.len();
        if pieces[0].lo.abs() > TILE_TOL {
            return Err(Error::InvalidArgument("first piece must start at 0".into()));
        }
        pieces[0].lo = 0.0;
        if (pieces[n - 1].hi - PI).abs() > TILE_TOL {
            return Err(Error::InvalidArgument("last piece must end at pi".into()));
        }
        pieces[n - 1].hi = PI;
        for i in 0..n {
            if !(pieces[i].lo < pieces[i].hi) {
                return Err(Error::InvalidArgument(format!("piece {i} has an empty interval")));
            }
            if i + 1 < n {
                if (pieces[i].hi - pieces[i + 1].lo).abs() > TILE_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "pieces {i} and {} leave a gap or overlap",
                        i + 1
                    )));
                }
                pieces[i + 1].lo = pieces[i].hi;
            }
        }
        let source = if n == 1 {
            pieces[0].expr.to_string()
        } else {
            pieces
                .iter()
                .map(|p| format!("[{:?}, {:?}]: {}", p.lo, p.hi, p.expr))
                .collect::<Vec<_>>()
                .join("; ")
        };
        Ok(PotentialExpr { source, pieces })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn is_piecewise(&self) -> bool {
        self.pieces.len() > 1
    }

    /// Interior piece boundaries.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces.iter().skip(1).map(|p| p.lo).collect()
    }

    /// Piece governing the open interval `(a, b)`.
    pub(crate) fn piece_on(&self, a: f64, b: f64) -> &Expr {
        let mid = 0.5 * (a + b);
        &self.piece_index_at(mid, Side::Interior).map(|i| &self.pieces[i]).unwrap_or(&self.pieces[0]).expr
    }

    fn piece_index_at(&self, x: f64, side: Side) -> Option<usize> {
        let n = self.pieces.len();
        for (i, p) in self.pieces.iter().enumerate() {
            let inside = match side {
                Side::Left => x > p.lo && x <= p.hi,
                Side::Right | Side::Interior => x >= p.lo && (x < p.hi || (i == n - 1 && x <= p.hi)),
            };
            if inside {
                return Some(i);
            }
        }
        match side {
            Side::Left if x == 0.0 => Some(0),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64, side: Side) -> Result<Complex64> {
        if !(x >= -TILE_TOL && x <= PI + TILE_TOL) {
            return Err(Error::OutOfDomain(x));
        }
        let x = x.clamp(0.0, PI);
        let i = self.piece_index_at(x, side).ok_or(Error::OutOfDomain(x))?;
        Ok(self.pieces[i].expr.eval(x))
    }

    /// `q + c`, piecewise.
    pub fn shifted(&self, c: Complex64) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece { lo: p.lo, hi: p.hi, expr: expr::add(p.expr.clone(), Expr::Num(c)) })
            .collect();
        Self::from_pieces(pieces).expect("shifting keeps the tiling")
    }
}

/// Which one-sided limit to take at a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
    Interior,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryAtPi {
    Robin(Complex64),
    Dirichlet,
}

/// `L(q, h, H, beta, gamma, d)`:
/// `-y'' + q y = lambda y` on `(0, pi)`, `y'(0) - h y(0) = 0`,
/// `y'(pi) + H y(pi) = 0` (or `y(pi) = 0`), and at `d`
/// `y(d+0) = beta y(d-0)`, `y'(d+0) = y'(d-0)/beta + gamma y(d-0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub q: PotentialExpr,
    pub h: Complex64,
    pub big_h: BoundaryAtPi,
    pub beta: f64,
    pub gamma: Complex64,
    pub d: f64,
}

impl Problem {
    pub fn new(
        q: PotentialExpr,
        h: Complex64,
        big_h: BoundaryAtPi,
        beta: f64,
        gamma: Complex64,
        d: f64,
    ) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidArgument(format!("beta must be real and positive, got {beta}")));
        }
        if !(d > 0.0 && d < PI) {
            return Err(Error::InvalidArgument(format!("d must lie strictly inside (0, pi), got {d}")));
        }
        if !(h.re.is_finite() && h.im.is_finite() && gamma.re.is_finite() && gamma.im.is_finite()) {
            return Err(Error::InvalidArgument("h and gamma must be finite".into()));
        }
        if let BoundaryAtPi::Robin(hh) = big_h {
            if !(hh.re.is_finite() && hh.im.is_finite()) {
                return Err(Error::InvalidArgument("H must be finite; use the Dirichlet variant".into()));
            }
        }
        Ok(Problem { q, h, big_h, beta, gamma, d })
    }

    /// Neumann-type data `h = H = 0`, no jump (`beta = 1`, `gamma = 0`) at `d = pi/2`.
    pub fn simple(q: &str) -> Result<Self> {
        Self::new(
            PotentialExpr::parse(q)?,
            Complex64::new(0.0, 0.0),
            BoundaryAtPi::Robin(Complex64::new(0.0, 0.0)),
            1.0,
            Complex64::new(0.0, 0.0),
            PI / 2.0,
        )
    }

    pub fn with_jump(mut self, beta: f64, gamma: Complex64, d: f64) -> Result<Self> {
        self.beta = beta;
        self.gamma = gamma;
        self.d = d;
        Self::new(self.q, self.h, self.big_h, self.beta, self.gamma, self.d)
    }

    pub fn with_h(mut self, h: Complex64) -> Self {
        self.h = h;
        self
    }

    pub fn with_big_h(mut self, big_h: BoundaryAtPi) -> Self {
        self.big_h = big_h;
        self
    }

    pub fn with_q(mut self, q: PotentialExpr) -> Self {
        self.q = q;
        self
    }

    pub fn b1(&self) -> f64 {
        0.5 * (self.beta + 1.0 / self.beta)
    }

    pub fn b2(&self) -> f64 {
        0.5 * (self.beta - 1.0 / self.beta)
    }

    /// Breakpoints in `(0, pi)`: piece boundaries and `d`, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v = self.q.breakpoints();
        v.push(self.d);
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup();
        v
    }

    /// Bound on `|q|` sampled over `[0, pi]`.
    pub fn q_sup(&self) -> f64 {
        let mut m: f64 = 0.0;
        for p in self.q.pieces() {
            for k in 0..=32 {
                let x = p.lo + (p.hi - p.lo) * k as f64 / 32.0;
                m = m.max(p.expr.eval(x).norm());
            }
        }
        m
    }
}

pub fn eval_q(problem: &Problem, x: f64, side: Side) -> Result<Complex64> {
    problem.q.eval(x, side)
}

pub fn parse_potential(source: &str) -> Result<PotentialExpr> {
    PotentialExpr::parse(source)
}

pub fn differentiate(e: &PotentialExpr, order: usize) -> PotentialExpr {
    let pieces = e
        .pieces()
        .iter()
        .map(|p| Piece { lo: p.lo, hi: p.hi, expr: p.expr.differentiate(order) })
        .collect();
    PotentialExpr::from_pieces(pieces).expect("differentiation keeps the tiling")
}

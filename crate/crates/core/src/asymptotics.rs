//! Large-`lambda` behaviour of solutions.
//!
//! - [`leading_phi`]: the leading term of `phi` on either side of `d`.
//! - [`build_expansion`] and [`expansion_y2`]: the expansion of `y_2` in the
//!   functions `nu_j(x, lambda)` with coefficients assembled from the
//!   `f_{p,j}` table.
//! - [`s_series`]: partial sums of `y_2 = sum_p S_p`, `y_2' = sum_p C_p`.
//! - [`decay_order_fit`]: decay of Wronskians of fundamental solutions of two
//!   potentials whose derivatives agree at `x0`.

use crate::charfn::jump_term;
use crate::engine::{self, Rider, Snapshot, Track, Weight};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::funcs::{cheb_points, to_poly, Func};
use crate::ode::Settings;
use crate::problem::{differentiate, PotentialExpr, Problem, Side};
use crate::quad;
use crate::scaled::Scaled;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// `(+-)_j`: `-1` for `j = 0, 1 (mod 4)`, `+1` for `j = 2, 3 (mod 4)`.
pub fn sign(j: usize) -> f64 {
    if j % 4 < 2 {
        -1.0
    } else {
        1.0
    }
}

fn parity(n: usize) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `nu_{2s} = sin(kx) / (2k)^{2s}`, `nu_{2s+1} = cos(kx) / (2k)^{2s+1}`, with `k = sqrt(lambda)`.
pub fn nu(j: usize, x: f64, k: C64) -> C64 {
    let trig = if j % 2 == 0 { (k * x).sin() } else { (k * x).cos() };
    trig / (k * 2.0).powi(j as i32)
}

/// `d/dx nu_j(x, lambda)`.
pub fn nu_dx(j: usize, x: f64, k: C64) -> C64 {
    let trig = if j % 2 == 0 { (k * x).cos() } else { -(k * x).sin() };
    k * trig / (k * 2.0).powi(j as i32)
}

/// Leading form of `(phi, phi')` at `x`: `cos(kx)` left of `d`, and
/// `b1 cos(kx) + b2 cos(k(2d - x))` right of it. `x = d` gives the `d-0` value.
pub fn leading_phi(problem: &Problem, x: f64, lambda: C64) -> (C64, C64) {
    let k = lambda.sqrt();
    if x <= problem.d {
        return ((k * x).cos(), -k * (k * x).sin());
    }
    let (b1, b2) = (problem.b1(), problem.b2());
    let mirror = k * (2.0 * problem.d - x);
    let value = (k * x).cos() * b1 + mirror.cos() * b2;
    let deriv = k * (-(k * x).sin() * b1 + mirror.sin() * b2);
    (value, deriv)
}

/// Coefficient table of the `y_2` expansion of order `m` on `[0, x_max]`.
#[derive(Clone, Debug)]
pub struct ExpansionTable {
    pub m: usize,
    pub x_max: f64,
    /// Every entry is an exact polynomial.
    pub symbolic: bool,
    /// `sigma(x) = int_0^x q`.
    pub sigma: Func,
    /// `f[p - 1][j - 1] = f_{p,j}` for `p, j = 1..=m+2`.
    pub f: Vec<Vec<Func>>,
    /// `a[j - 1] = a_j`, `j = 1..=m+2`.
    pub a: Vec<Func>,
    /// `b[j] = b_j`, `j = 0..=m+1`.
    pub b: Vec<Func>,
    /// `q^{(m)}`, for the remainder integral.
    pub q_m: Expr,
}

impl ExpansionTable {
    pub fn f(&self, p: usize, j: usize) -> &Func {
        &self.f[p - 1][j - 1]
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `(q f)^{(n)}` by the Leibniz rule, with `q` derivatives taken exactly.
fn product_derivative(qd: &[Func], f: &Func, n: usize) -> Func {
    (0..=n).fold(Func::zero(), |acc, i| acc.add(&qd[i].mul(&f.derivative_n(n - i)).scale(ONE * binomial(n, i))))
}

/// `g(x) - (-1)^{j-1} g(0)`.
fn reflected(g: &Func, j: usize) -> Func {
    g.minus_constant(g.eval(0.0) * parity(j - 1))
}

pub fn build_expansion(q: &PotentialExpr, m: usize, x_max: f64) -> Result<ExpansionTable> {
    if !(x_max > 0.0 && x_max <= PI) {
        return Err(Error::OutOfDomain(x_max));
    }
    if let Some(b) = q.breakpoints().into_iter().find(|&b| b < x_max) {
        return Err(Error::Precondition(format!("q has a breakpoint at {b} inside (0, {x_max})")));
    }
    let expr = q.pieces()[0].expr.clone();
    let derivs: Vec<Expr> = (0..=m).map(|i| expr.differentiate(i)).collect();
    let symbolic = derivs.iter().all(|e| to_poly(e).is_some());
    let to_func = |e: &Expr| match to_poly(e) {
        Some(p) if symbolic => Func::Poly(p),
        _ => Func::cheb_from(x_max, |x| e.eval(x)),
    };
    let qd: Vec<Func> = derivs.iter().map(to_func).collect();
    let sigma = qd[0].integral();
    let n = m + 2;

    let mut f = vec![vec![Func::zero(); n]; n];
    for j in 1..=n {
        let s = if j == 1 { sigma.clone() } else { qd[j - 2].clone() };
        f[0][j - 1] = reflected(&s, j).scale(ONE * sign(j));
    }
    for p in 2..=n {
        for j in p..=n {
            let mut entry = qd[0].mul(&f[p - 2][j - 2]).integral().scale(ONE * parity(j));
            for s in (p - 1)..=j.saturating_sub(2) {
                let g = product_derivative(&qd, &f[p - 2][s - 1], j - s - 2);
                entry = entry.sub(&reflected(&g, j).scale(ONE * (sign(s) * sign(j))));
            }
            f[p - 1][j - 1] = entry;
        }
    }

    let column = |j: usize, from: usize| (from..=n).fold(Func::zero(), |acc, p| acc.add(&f[p - 1][j - 1]));
    let mut a: Vec<Func> = (1..=m + 1).map(|j| column(j, 1)).collect();
    a.push(column(n, 2));

    let b_entry = |j: usize, from: usize| {
        (from..=n).fold(Func::zero(), |acc, p| {
            acc.add(&f[p - 1][j - 1].derivative()).add(&f[p - 1][j].scale(ONE * (parity(j + 1) * 0.5)))
        })
    };
    let mut b = vec![f[0][0].scale(ONE * -0.5)];
    b.extend((1..=m).map(|j| b_entry(j, 1)));
    b.push(b_entry(m + 1, 2));

    Ok(ExpansionTable { m, x_max, symbolic, sigma, f, a, b, q_m: derivs[m].clone() })
}

/// Integral of `kernel(x - 2t) q^{(m)}(t)` over `[0, x]`.
fn remainder(table: &ExpansionTable, x: f64, kernel: impl Fn(f64) -> C64 + Sync) -> Result<C64> {
    let g = |t: f64| kernel(x - 2.0 * t) * table.q_m.eval(t);
    let mag = (0..=64).map(|i| g(x * i as f64 / 64.0).norm()).fold(0.0, f64::max);
    quad::integrate(&g, 0.0, x, 1e-13 * mag * x, 1e-12)
}

/// Truncated expansion of `(y_2, y_2')` at `x`: the terms up to `nu_{m+2}`
/// plus the `q^{(m)}` remainder integral.
pub fn expansion_y2(table: &ExpansionTable, x: f64, lambda: C64) -> Result<(C64, C64)> {
    if !(x >= 0.0 && x <= table.x_max) {
        return Err(Error::OutOfDomain(x));
    }
    if lambda == ZERO {
        return Err(Error::InvalidArgument("the expansion needs lambda != 0".into()));
    }
    let k = lambda.sqrt();
    let m = table.m;
    let tail = sign(m + 2) / k;
    let mut y = (k * x).sin() / k;
    for (i, a) in table.a.iter().enumerate() {
        y += a.eval(x) * nu(i + 1, x, k) / k;
    }
    y += tail * remainder(table, x, |u| nu(m + 1, u, k))?;
    let mut dy = (k * x).cos();
    for (j, b) in table.b.iter().enumerate() {
        dy += b.eval(x) * nu(j, x, k) / k;
    }
    dy += tail * remainder(table, x, |u| nu_dx(m + 1, u, k))?;
    Ok((y, dy))
}

#[derive(Clone, Debug)]
pub struct SeriesResult {
    /// `S_p(x)` for `p = 0..=P`.
    pub terms_s: Vec<C64>,
    /// `C_p(x)` for `p = 0..=P`.
    pub terms_c: Vec<C64>,
    pub sum_s: C64,
    pub sum_c: C64,
}

/// Nodes per panel in [`s_series`].
const PANEL_NODES: usize = 24;

struct Panel {
    a: f64,
    len: f64,
    nodes: Vec<f64>,
    q: Vec<C64>,
}

/// `sin(k u) / k`, continuous at `k = 0`.
fn sin_over_k(k: C64, u: f64) -> C64 {
    let z = k * u;
    if z.norm() < 1e-8 {
        u * (1.0 - z * z / 6.0)
    } else {
        z.sin() / k
    }
}

/// `(S_p, C_p)` at `x` for `p = 0..=order`, by iterated Chebyshev quadrature
/// of the Volterra recursion on panels no longer than `min(0.5, 2/|k|)`.
pub fn s_series(q: &PotentialExpr, x: f64, lambda: C64, order: usize) -> Result<SeriesResult> {
    if !(x > 0.0 && x <= PI) {
        return Err(Error::OutOfDomain(x));
    }
    let k = lambda.sqrt();
    let h_max = if k.norm() > 4.0 { 2.0 / k.norm() } else { 0.5 };

    let mut cuts = vec![0.0];
    cuts.extend(q.breakpoints().into_iter().filter(|&b| b < x));
    cuts.push(x);
    let unit = cheb_points(PANEL_NODES, 1.0);
    let weights: Vec<f64> = (0..PANEL_NODES)
        .map(|i| {
            let mut e = vec![ZERO; PANEL_NODES];
            e[i] = ONE;
            Func::cheb_from_values(1.0, &e).integral().eval(1.0).re
        })
        .collect();
    let mut panels = Vec::new();
    for w in cuts.windows(2) {
        let pieces = ((w[1] - w[0]) / h_max).ceil().max(1.0) as usize;
        let len = (w[1] - w[0]) / pieces as f64;
        for i in 0..pieces {
            let a = w[0] + len * i as f64;
            let nodes: Vec<f64> = unit.iter().map(|u| a + len * u).collect();
            let qv = nodes.iter().map(|&t| q.eval(t, Side::Interior)).collect::<Result<Vec<_>>>()?;
            panels.push(Panel { a, len, nodes, q: qv });
        }
    }

    let mut prev: Vec<Vec<C64>> = panels.iter().map(|p| p.nodes.iter().map(|&t| sin_over_k(k, t)).collect()).collect();
    let mut terms_s = vec![sin_over_k(k, x)];
    let mut terms_c = vec![(k * x).cos()];

    for _ in 1..=order {
        let g: Vec<Vec<C64>> =
            panels.iter().zip(&prev).map(|(p, s)| p.q.iter().zip(s).map(|(a, b)| a * b).collect()).collect();
        let fits: Vec<Func> = panels.iter().zip(&g).map(|(p, gv)| Func::cheb_from_values(p.len, gv)).collect();
        // (S_p, C_p) at a point t inside panel `pi`
        let at = |t: f64, pi: usize| -> (C64, C64) {
            let (mut s, mut c) = (ZERO, ZERO);
            for (panel, gv) in panels[..pi].iter().zip(&g) {
                for ((&node, &gj), &w) in panel.nodes.iter().zip(gv).zip(&weights) {
                    s += sin_over_k(k, t - node) * gj * (w * panel.len);
                    c += (k * (t - node)).cos() * gj * (w * panel.len);
                }
            }
            let part = t - panels[pi].a;
            for (&u, &w) in unit.iter().zip(&weights) {
                let node = panels[pi].a + part * u;
                let gj = fits[pi].eval(node - panels[pi].a);
                s += sin_over_k(k, t - node) * gj * (w * part);
                c += (k * (t - node)).cos() * gj * (w * part);
            }
            (s, c)
        };
        let next: Vec<Vec<C64>> = panels
            .par_iter()
            .enumerate()
            .map(|(pi, p)| p.nodes.iter().map(|&t| at(t, pi).0).collect())
            .collect();
        let (s, c) = at(x, panels.len() - 1);
        terms_s.push(s);
        terms_c.push(c);
        prev = next;
    }
    Ok(SeriesResult { sum_s: terms_s.iter().sum(), sum_c: terms_c.iter().sum(), terms_s, terms_c })
}

/// Wronskian `<u_A, v_B> = u_A v_B' - u_A' v_B` of fundamental solutions
/// `y_{i,r}` of two problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Combination {
    /// `<y_1, y~_1>`, claimed order `m + 1`.
    Y1Y1,
    /// `<y_1, y~_2>`, claimed order `m + 2`.
    Y1Y2,
    /// `<y_2, y~_1>`, claimed order `m + 2`.
    Y2Y1,
    /// `<y_2, y~_2>`, claimed order `m + 3`.
    Y2Y2,
}

impl Combination {
    pub const ALL: [Combination; 4] = [Combination::Y1Y1, Combination::Y1Y2, Combination::Y2Y1, Combination::Y2Y2];

    pub fn name(self) -> &'static str {
        match self {
            Combination::Y1Y1 => "y1y1",
            Combination::Y1Y2 => "y1y2",
            Combination::Y2Y1 => "y2y1",
            Combination::Y2Y2 => "y2y2",
        }
    }

    pub fn parse(s: &str) -> Option<Combination> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    /// Claimed decay exponent for smoothness order `m` (`-1` for `L^1`).
    pub fn claimed_exponent(self, m: i32) -> i32 {
        m + match self {
            Combination::Y1Y1 => 1,
            Combination::Y1Y2 | Combination::Y2Y1 => 2,
            Combination::Y2Y2 => 3,
        }
    }

    /// Track indices among `[y1_A, y2_A, y1_B, y2_B]`.
    fn tracks(self) -> (usize, usize) {
        match self {
            Combination::Y1Y1 => (0, 2),
            Combination::Y1Y2 => (0, 3),
            Combination::Y2Y1 => (1, 2),
            Combination::Y2Y2 => (1, 3),
        }
    }

    /// Value at `r`.
    fn initial(self) -> f64 {
        match self {
            Combination::Y1Y1 | Combination::Y2Y2 => 0.0,
            Combination::Y1Y2 => 1.0,
            Combination::Y2Y1 => -1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DecayOptions {
    /// Moduli `|lambda|` along the ray.
    pub ys: Vec<f64>,
    /// Width of the left neighbourhood of `x0` on which both potentials must be smooth.
    pub delta: f64,
    /// Ray direction `arg(lambda)`.
    pub angle: f64,
    pub settings: Settings,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions {
            ys: crate::entire::geometric_ray(2.0, 6.0, 3),
            delta: 0.2,
            angle: PI / 2.0,
            settings: Settings::tight(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecaySample {
    pub y: f64,
    /// `ln |W|`.
    pub ln_abs: f64,
    /// `ln |W| - 2 |Im sqrt(lambda)| (x0 - r)`.
    pub ln_normalized: f64,
    pub below_floor: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayFit {
    pub combination: Combination,
    pub claimed_exponent: i32,
    pub samples: Vec<DecaySample>,
    /// Slope of `ln |W_norm|` against `ln |sqrt(lambda)|`; `None` when fewer
    /// than three samples sit above the measurement floor.
    pub slope: Option<f64>,
    pub identically_zero: bool,
    pub pass: bool,
}

/// Least-squares slope of `ys` against `xs`.
pub(crate) fn ls_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

pub(crate) fn check_matching(a: &Problem, b: &Problem, x0: f64, m: i32, delta: f64) -> Result<()> {
    for p in [a, b] {
        if let Some(bp) = p.q.breakpoints().into_iter().find(|&bp| bp > x0 - delta && bp < x0) {
            return Err(Error::Precondition(format!("potential has a breakpoint at {bp} within delta of x0")));
        }
    }
    for j in 0..=m {
        let j = j as usize;
        let qa = differentiate(&a.q, j).eval(x0, Side::Left)?;
        let qb = differentiate(&b.q, j).eval(x0, Side::Left)?;
        if (qa - qb).norm() > 1e-9 * (1.0 + qa.norm().max(qb.norm())) {
            return Err(Error::Precondition(format!("derivative {j} of the potentials differs at x0: {qa} vs {qb}")));
        }
    }
    Ok(())
}

/// Jump points in `(r, x0)` with the `(beta, gamma)` each problem applies there.
fn jump_points(a: &Problem, b: &Problem, r: f64, x0: f64) -> Vec<(f64, (f64, C64), (f64, C64))> {
    let trivial = |p: &Problem| p.beta == 1.0 && p.gamma == ZERO;
    let mut points: Vec<f64> = [a, b]
        .iter()
        .filter(|p| !trivial(p) && p.d > r && p.d < x0)
        .map(|p| p.d)
        .collect();
    points.sort_by(|u, v| u.partial_cmp(v).unwrap());
    points.dedup();
    let params = |p: &Problem, x: f64| if p.d == x { (p.beta, p.gamma) } else { (1.0, ZERO) };
    points.into_iter().map(|x| (x, params(a, x), params(b, x))).collect()
}

fn snapshot_left(snaps: &[Snapshot], x: f64) -> &Snapshot {
    snaps
        .iter()
        .find(|s| s.x == x && s.side == Side::Left)
        .or_else(|| snaps.iter().find(|s| s.x == x))
        .expect("jump points are snapshotted")
}

/// Samples the combination along `lambda = y e^{i angle}`, through
/// `W(x0) = W(r) + int_r^x0 (q_B - q_A) u v + jump terms`, which avoids the
/// cancellation of the direct bracket. Samples below
/// `1e3 eps (|W(r)| + int |q_B - q_A| |u| |v| + sum |J|)` are excluded from the fit.
pub fn decay_order_fit(
    a: &Problem,
    b: &Problem,
    r: f64,
    x0: f64,
    m: i32,
    combination: Combination,
    options: &DecayOptions,
) -> Result<DecayFit> {
    if !(r >= 0.0 && r < x0 && x0 <= PI) {
        return Err(Error::InvalidArgument(format!("need 0 <= r < x0 <= pi, got r = {r}, x0 = {x0}")));
    }
    if m < -1 {
        return Err(Error::InvalidArgument("smoothness order must be at least -1".into()));
    }
    if options.ys.iter().any(|&y| !(y > 0.0)) {
        return Err(Error::InvalidArgument("ray moduli must be positive".into()));
    }
    check_matching(a, b, x0, m, options.delta)?;
    let (ta, tb) = combination.tracks();
    let w_r = combination.initial();
    let jumps = jump_points(a, b, r, x0);
    let tracks = [
        Track { problem: a, init: vec![(ONE, ZERO)] },
        Track { problem: a, init: vec![(ZERO, ONE)] },
        Track { problem: b, init: vec![(ONE, ZERO)] },
        Track { problem: b, init: vec![(ZERO, ONE)] },
    ];
    let riders = [
        Rider { a: (ta, 0), b: (tb, 0), weight: Weight::QDiff },
        Rider { a: (ta, 0), b: (tb, 0), weight: Weight::AbsQDiff },
    ];
    let direction = C64::from_polar(1.0, options.angle);

    let samples: Vec<(DecaySample, bool)> = options
        .ys
        .par_iter()
        .map(|&y| {
            let lambda = direction * y;
            let snaps = engine::run(&options.settings, lambda, &tracks, &riders, r, x0, &[])?;
            let end = snaps.last().expect("run returns the end point");
            let mut w = Scaled::from(w_r) + end.riders[0];
            let mut scale = w_r.abs() + end.riders[1].abs();
            for &(x, pa, pb) in &jumps {
                let s = snapshot_left(&snaps, x);
                let j = jump_term(pa, pb, &s.tracks[ta], &s.tracks[tb]);
                w = w + j;
                scale += j.abs();
            }
            let ln_abs = w.ln_abs();
            let floor = (1e3 * f64::EPSILON * scale).ln();
            let growth = 2.0 * lambda.sqrt().im.abs() * (x0 - r);
            let sample = DecaySample { y, ln_abs, ln_normalized: ln_abs - growth, below_floor: !(ln_abs > floor) };
            Ok((sample, w.is_zero()))
        })
        .collect::<Result<Vec<_>>>()?;

    let identically_zero = samples.iter().all(|s| s.1);
    let samples: Vec<DecaySample> = samples.into_iter().map(|s| s.0).collect();
    let points: Vec<(f64, f64)> =
        samples.iter().filter(|s| !s.below_floor).map(|s| (0.5 * s.y.ln(), s.ln_normalized)).collect();
    let claimed = combination.claimed_exponent(m);
    let slope = if points.len() >= 3 { Some(ls_slope(&points)) } else { None };
    let pass = slope.map_or(true, |s| s <= -(claimed as f64) + 0.3);
    Ok(DecayFit { combination, claimed_exponent: claimed, samples, slope, identically_zero, pass })
}

//! Shooting solutions of `-y'' + q y = lambda y` and of the lambda-derivative
//! chain `-y_nu'' + q y_nu = lambda y_nu + y_{nu-1}` through the jump at `d`.
//!
//! Several chains ("tracks") can be integrated in one pass on a shared step
//! sequence. Each track carries its own logarithmic scale so that solutions
//! growing like `exp(|Im sqrt(lambda)| x)` never overflow. Products of track
//! components can be integrated alongside as quadrature riders; their
//! increments are folded into [`Scaled`] accumulators after every step.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::ode::{self, Settings, System, Workspace};
use crate::problem::{BoundaryAtPi, Problem, Side};
use crate::scaled::Scaled;
use num_complex::Complex64;
use std::f64::consts::PI;

type C64 = Complex64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Solution families. `Fundamental { i, r }` is `y_{i,r}` with
/// `y_{1,r}(r) = 1, y_{1,r}'(r) = 0` and `y_{2,r}(r) = 0, y_{2,r}'(r) = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChainKind {
    Phi,
    Psi,
    PsiInf,
    Fundamental { i: u8, r: f64 },
}

/// Values `(y_nu, y_nu')` for `nu = 0..=nu_max` at one point, stored as
/// mantissas sharing the scale `exp(log_scale)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub x: f64,
    pub side: Side,
    pub log_scale: f64,
    pub values: Vec<(C64, C64)>,
}

impl ChainState {
    pub fn nu_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn y(&self, nu: usize) -> Scaled {
        Scaled::new(self.values[nu].0, self.log_scale)
    }

    pub fn dy(&self, nu: usize) -> Scaled {
        Scaled::new(self.values[nu].1, self.log_scale)
    }

    /// `<y, z> = y z' - y' z` between component `nu` of `self` and `mu` of `other`.
    pub fn bracket(&self, nu: usize, other: &ChainState, mu: usize) -> Scaled {
        let (y, dy) = self.values[nu];
        let (z, dz) = other.values[mu];
        Scaled::new(y * dz - dy * z, self.log_scale + other.log_scale)
    }
}

#[derive(Clone, Debug)]
pub struct SolutionChain {
    pub lambda: C64,
    pub kind: ChainKind,
    pub states: Vec<ChainState>,
}

impl SolutionChain {
    pub fn grid(&self) -> Vec<(f64, Side)> {
        self.states.iter().map(|s| (s.x, s.side)).collect()
    }

    /// State at `x`; at the jump point `side` selects `d-0` or `d+0`.
    pub fn state_at(&self, x: f64, side: Side) -> Option<&ChainState> {
        let hits: Vec<&ChainState> = self.states.iter().filter(|s| s.x == x).collect();
        match hits.len() {
            0 => None,
            1 => Some(hits[0]),
            _ => hits.into_iter().find(|s| s.side == side),
        }
    }

    pub fn first(&self) -> &ChainState {
        &self.states[0]
    }

    pub fn last(&self) -> &ChainState {
        self.states.last().expect("chain has states")
    }
}

pub(crate) struct Track<'a> {
    pub problem: &'a Problem,
    pub init: Vec<(C64, C64)>,
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Weight {
    One,
    /// `q_b(x) - q_a(x)` for the problems of the two tracks involved.
    QDiff,
    /// `|q_b - q_a| |y_a| |y_b|`, for error floors.
    AbsQDiff,
}

/// Integrand `weight(x) * y_{a.1}[track a.0] * y_{b.1}[track b.0]`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Rider {
    pub a: (usize, usize),
    pub b: (usize, usize),
    pub weight: Weight,
}

#[derive(Clone, Debug)]
pub(crate) struct Snapshot {
    pub x: f64,
    pub side: Side,
    pub tracks: Vec<ChainState>,
    /// Integrals of the riders from the start point to `x`.
    pub riders: Vec<Scaled>,
}

struct SegSys<'a> {
    lambda: C64,
    exprs: Vec<&'a Expr>,
    offsets: Vec<usize>,
    lens: Vec<usize>,
    riders: &'a [Rider],
    n_ctrl: usize,
}

impl System for SegSys<'_> {
    fn dim(&self) -> usize {
        self.n_ctrl + self.riders.len()
    }

    fn controlled(&self) -> usize {
        self.n_ctrl
    }

    fn rhs(&self, x: f64, y: &[C64], dy: &mut [C64]) {
        let mut qv = [ZERO; 8];
        let mut qheap = Vec::new();
        let qs: &mut [C64] = if self.exprs.len() <= 8 {
            &mut qv[..self.exprs.len()]
        } else {
            qheap.resize(self.exprs.len(), ZERO);
            &mut qheap[..]
        };
        for (t, e) in self.exprs.iter().enumerate() {
            qs[t] = match e {
                Expr::Num(c) => *c,
                _ => e.eval(x),
            };
        }
        for t in 0..self.exprs.len() {
            let off = self.offsets[t];
            let shift = qs[t] - self.lambda;
            for nu in 0..self.lens[t] {
                let i = off + 2 * nu;
                dy[i] = y[i + 1];
                dy[i + 1] = shift * y[i] - if nu > 0 { y[i - 2] } else { ZERO };
            }
        }
        for (r, rd) in self.riders.iter().enumerate() {
            let ya = y[self.offsets[rd.a.0] + 2 * rd.a.1];
            let yb = y[self.offsets[rd.b.0] + 2 * rd.b.1];
            dy[self.n_ctrl + r] = match rd.weight {
                Weight::One => ya * yb,
                Weight::QDiff => (qs[rd.b.0] - qs[rd.a.0]) * ya * yb,
                Weight::AbsQDiff => C64::new((qs[rd.b.0] - qs[rd.a.0]).norm() * ya.norm() * yb.norm(), 0.0),
            };
        }
    }
}

fn check_lambda(lambda: C64) -> Result<()> {
    if lambda.re.is_finite() && lambda.im.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteLambda(format!("{lambda}")))
    }
}

struct Event {
    x: f64,
    jumps: Vec<usize>,
}

/// Integrates all tracks from `x_start` to `x_end`, returning snapshots at the
/// start, at every jump point (both sides), at each requested output point
/// and at the end, in integration order.
pub(crate) fn run(
    settings: &Settings,
    lambda: C64,
    tracks: &[Track],
    riders: &[Rider],
    x_start: f64,
    x_end: f64,
    outputs: &[f64],
) -> Result<Vec<Snapshot>> {
    check_lambda(lambda)?;
    let forward = x_end > x_start;
    let (lo, hi) = if forward { (x_start, x_end) } else { (x_end, x_start) };
    let inside = |x: f64| x > lo && x < hi;

    let mut events: Vec<Event> = Vec::new();
    let mut push = |x: f64, jump: Option<usize>| {
        if let Some(e) = events.iter_mut().find(|e| (e.x - x).abs() <= 1e-14 * (1.0 + x.abs())) {
            if let Some(t) = jump {
                e.jumps.push(t);
            }
        } else {
            events.push(Event { x, jumps: jump.into_iter().collect() });
        }
    };
    for (t, tr) in tracks.iter().enumerate() {
        if inside(tr.problem.d) {
            push(tr.problem.d, Some(t));
        }
    }
    for tr in tracks {
        for b in tr.problem.q.breakpoints() {
            if inside(b) {
                push(b, None);
            }
        }
    }
    for &x in outputs {
        if inside(x) {
            push(x, None);
        }
    }
    events.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
    if !forward {
        events.reverse();
    }

    let mut offsets = Vec::with_capacity(tracks.len());
    let mut lens = Vec::with_capacity(tracks.len());
    let mut n_ctrl = 0;
    for tr in tracks {
        offsets.push(n_ctrl);
        lens.push(tr.init.len());
        n_ctrl += 2 * tr.init.len();
    }
    let dim = n_ctrl + riders.len();
    let mut y = vec![ZERO; dim];
    for (t, tr) in tracks.iter().enumerate() {
        for (nu, (v, dv)) in tr.init.iter().enumerate() {
            y[offsets[t] + 2 * nu] = *v;
            y[offsets[t] + 2 * nu + 1] = *dv;
        }
    }
    let mut logs = vec![0.0; tracks.len()];
    let mut acc = vec![Scaled::ZERO; riders.len()];
    // Normalise the initial data so every track starts at unit size.
    rescale(&mut y, None, &offsets, &lens, riders, n_ctrl, &mut logs);

    let snap = |x: f64, side: Side, y: &[C64], logs: &[f64], acc: &[Scaled]| Snapshot {
        x,
        side,
        tracks: (0..tracks.len())
            .map(|t| ChainState {
                x,
                side,
                log_scale: logs[t],
                values: (0..lens[t]).map(|nu| (y[offsets[t] + 2 * nu], y[offsets[t] + 2 * nu + 1])).collect(),
            })
            .collect(),
        riders: acc.to_vec(),
    };

    let mut out = vec![snap(x_start, Side::Interior, &y, &logs, &acc)];
    let mut ws = Workspace::new(dim);
    let mut h = 0.0;
    let mut xa = x_start;
    let stops: Vec<(f64, Vec<usize>)> =
        events.into_iter().map(|e| (e.x, e.jumps)).chain(std::iter::once((x_end, Vec::new()))).collect();
    for (xb, jumps) in stops {
        let exprs = tracks.iter().map(|tr| tr.problem.q.piece_on(xa, xb)).collect();
        let sys = SegSys { lambda, exprs, offsets: offsets.clone(), lens: lens.clone(), riders, n_ctrl };
        ode::integrate(settings, &sys, xa, xb, &mut y, &mut h, &mut ws, |y, f| {
            for (r, rd) in riders.iter().enumerate() {
                let i = n_ctrl + r;
                acc[r] = acc[r] + Scaled::new(y[i], logs[rd.a.0] + logs[rd.b.0]);
                y[i] = ZERO;
            }
            rescale(y, Some(f), &offsets, &lens, riders, n_ctrl, &mut logs);
        })?;
        xa = xb;
        if jumps.is_empty() {
            let at_d = tracks.iter().any(|tr| tr.problem.d == xb);
            let side = match (at_d, forward) {
                (false, _) => Side::Interior,
                (true, true) => Side::Left,
                (true, false) => Side::Right,
            };
            out.push(snap(xb, side, &y, &logs, &acc));
            continue;
        }
        let (before, after) = if forward { (Side::Left, Side::Right) } else { (Side::Right, Side::Left) };
        out.push(snap(xb, before, &y, &logs, &acc));
        for &t in &jumps {
            let p = tracks[t].problem;
            for nu in 0..lens[t] {
                let i = offsets[t] + 2 * nu;
                let (v, dv) = (y[i], y[i + 1]);
                if forward {
                    y[i] = v * p.beta;
                    y[i + 1] = dv / p.beta + p.gamma * v;
                } else {
                    let vm = v / p.beta;
                    y[i] = vm;
                    y[i + 1] = (dv - p.gamma * vm) * p.beta;
                }
            }
        }
        out.push(snap(xb, after, &y, &logs, &acc));
        h = 0.0;
    }
    Ok(out)
}

fn rescale(
    y: &mut [C64],
    mut f: Option<&mut [C64]>,
    offsets: &[usize],
    lens: &[usize],
    riders: &[Rider],
    n_ctrl: usize,
    logs: &mut [f64],
) {
    let mut facs = [1.0f64; 8];
    let mut fheap = Vec::new();
    let facs: &mut [f64] = if offsets.len() <= 8 {
        &mut facs[..offsets.len()]
    } else {
        fheap.resize(offsets.len(), 1.0);
        &mut fheap[..]
    };
    for t in 0..offsets.len() {
        let range = offsets[t]..offsets[t] + 2 * lens[t];
        let m = y[range.clone()].iter().fold(0.0f64, |m, z| m.max(z.re.abs()).max(z.im.abs()));
        if m > 0.0 && m.is_finite() {
            let s = 1.0 / m;
            for z in &mut y[range.clone()] {
                *z *= s;
            }
            if let Some(f) = f.as_deref_mut() {
                for z in &mut f[range] {
                    *z *= s;
                }
            }
            logs[t] += m.ln();
            facs[t] = s;
        }
    }
    for (r, rd) in riders.iter().enumerate() {
        let s = facs[rd.a.0] * facs[rd.b.0];
        y[n_ctrl + r] *= s;
        if let Some(f) = f.as_deref_mut() {
            f[n_ctrl + r] *= s;
        }
    }
}

/// Initial data for a chain of depth `nu_max`, with its starting point.
pub(crate) fn initial_data(problem: &Problem, kind: ChainKind, nu_max: usize) -> (f64, Vec<(C64, C64)>) {
    let mut init = vec![(ZERO, ZERO); nu_max + 1];
    let x0 = match kind {
        ChainKind::Phi => {
            init[0] = (ONE, problem.h);
            0.0
        }
        ChainKind::Psi => {
            init[0] = match problem.big_h {
                BoundaryAtPi::Robin(hh) => (ONE, -hh),
                BoundaryAtPi::Dirichlet => (ZERO, ONE),
            };
            PI
        }
        ChainKind::PsiInf => {
            init[0] = (ZERO, ONE);
            PI
        }
        ChainKind::Fundamental { i, r } => {
            init[0] = if i == 1 { (ONE, ZERO) } else { (ZERO, ONE) };
            r
        }
    };
    (x0, init)
}

/// Solves one chain and returns its states at `0`, `d-0`, `d+0`, `pi` and the
/// requested points, sorted by position. Fundamental solutions start at `r`.
/// For a Dirichlet problem `Psi` coincides with `PsiInf`.
pub fn solve_chain(
    problem: &Problem,
    lambda: C64,
    kind: ChainKind,
    nu_max: usize,
    grid_request: &[f64],
) -> Result<SolutionChain> {
    solve_chain_with(&Settings::default(), problem, lambda, kind, nu_max, grid_request)
}

pub fn solve_chain_with(
    settings: &Settings,
    problem: &Problem,
    lambda: C64,
    kind: ChainKind,
    nu_max: usize,
    grid_request: &[f64],
) -> Result<SolutionChain> {
    for &x in grid_request {
        if !(0.0..=PI).contains(&x) {
            return Err(Error::OutOfDomain(x));
        }
    }
    let (x0, init) = initial_data(problem, kind, nu_max);
    if let ChainKind::Fundamental { i, r } = kind {
        if !(i == 1 || i == 2) {
            return Err(Error::InvalidArgument(format!("fundamental index must be 1 or 2, got {i}")));
        }
        if !(0.0..PI).contains(&r) {
            return Err(Error::InvalidArgument(format!("r must lie in [0, pi), got {r}")));
        }
    }
    let x1 = match kind {
        ChainKind::Psi | ChainKind::PsiInf => 0.0,
        _ => PI,
    };
    let track = Track { problem, init };
    let snaps = run(settings, lambda, std::slice::from_ref(&track), &[], x0, x1, grid_request)?;
    let mut states: Vec<ChainState> = snaps.into_iter().map(|mut s| s.tracks.remove(0)).collect();
    if x1 < x0 {
        states.reverse();
    }
    Ok(SolutionChain { lambda, kind, states })
}

/// `(y_{1,r}, y_{2,r})` at `x0`. The jump is applied only when `d` lies in
/// `(r, x0)`; at `x0 = d` the returned states are the `d-0` values.
pub fn fundamental_pair(problem: &Problem, r: f64, x0: f64, lambda: C64) -> Result<(ChainState, ChainState)> {
    fundamental_pair_with(&Settings::default(), problem, r, x0, lambda)
}

pub fn fundamental_pair_with(
    settings: &Settings,
    problem: &Problem,
    r: f64,
    x0: f64,
    lambda: C64,
) -> Result<(ChainState, ChainState)> {
    if !(r >= 0.0 && r < x0 && x0 <= PI) {
        return Err(Error::InvalidArgument(format!("need 0 <= r < x0 <= pi, got r = {r}, x0 = {x0}")));
    }
    let tracks = [
        Track { problem, init: vec![(ONE, ZERO)] },
        Track { problem, init: vec![(ZERO, ONE)] },
    ];
    let mut snaps = run(settings, lambda, &tracks, &[], r, x0, &[])?;
    let mut last = snaps.pop().expect("run returns the end point").tracks;
    let y2 = last.pop().unwrap();
    let y1 = last.pop().unwrap();
    Ok((y1, y2))
}

/// Largest deviation of `<y, z>` (zeroth components) from its value at the
/// first grid point.
pub fn wronskian_check(a: &SolutionChain, b: &SolutionChain) -> Result<f64> {
    if a.states.len() != b.states.len()
        || a.states.iter().zip(&b.states).any(|(s, t)| s.x != t.x || s.side != t.side)
    {
        return Err(Error::MismatchedGrids);
    }
    let w0 = a.states[0].bracket(0, &b.states[0], 0);
    Ok(a.states
        .iter()
        .zip(&b.states)
        .map(|(s, t)| (s.bracket(0, t, 0) - w0).abs())
        .fold(0.0, f64::max))
}

/// State of the `phi` chain at `pi`.
pub(crate) fn phi_at_pi(settings: &Settings, problem: &Problem, lambda: C64, nu_max: usize) -> Result<ChainState> {
    let (x0, init) = initial_data(problem, ChainKind::Phi, nu_max);
    let track = Track { problem, init };
    let mut snaps = run(settings, lambda, std::slice::from_ref(&track), &[], x0, PI, &[])?;
    Ok(snaps.pop().unwrap().tracks.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::PotentialExpr;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn cosine_solution() {
        let p = Problem::simple("0").unwrap();
        let ch = solve_chain(&p, c(1.0, 0.0), ChainKind::Phi, 1, &[]).unwrap();
        let end = ch.last();
        assert_eq!(end.x, PI);
        assert!((end.y(0).value() + 1.0).norm() < 1e-9);
        assert!(end.y(1).value().norm() < 1e-9);
    }

    #[test]
    fn grid_contains_both_sides_of_d() {
        let p = Problem::simple("cos(x)").unwrap().with_jump(2.0, c(0.3, 0.1), 1.0).unwrap();
        let ch = solve_chain(&p, c(3.0, 1.0), ChainKind::Psi, 2, &[0.5, 2.0]).unwrap();
        let g = ch.grid();
        let xs: Vec<f64> = g.iter().map(|(x, _)| *x).collect();
        assert_eq!(xs, vec![0.0, 0.5, 1.0, 1.0, 2.0, PI]);
        let l = ch.state_at(1.0, Side::Left).unwrap();
        let r = ch.state_at(1.0, Side::Right).unwrap();
        for nu in 0..=2 {
            let yl = l.y(nu).value();
            let yr = r.y(nu).value();
            assert!((yr - yl * 2.0).norm() <= 1e-12 * yr.norm());
            let dr = r.dy(nu).value();
            let expect = l.dy(nu).value() / 2.0 + c(0.3, 0.1) * yl;
            assert!((dr - expect).norm() <= 1e-12 * dr.norm().max(expect.norm()));
        }
    }

    #[test]
    fn fundamental_pair_closed_forms() {
        let p = Problem::simple("0").unwrap();
        let (_, y2) = fundamental_pair(&p, 0.0, PI / 2.0, c(4.0, 0.0)).unwrap();
        assert!(y2.y(0).value().norm() < 1e-10);
        let (y1, _) = fundamental_pair(&p, 0.0, PI, c(1.0, 0.0)).unwrap();
        assert!((y1.y(0).value() + 1.0).norm() < 1e-10);
        let p1 = Problem::simple("1").unwrap();
        let (_, y2) = fundamental_pair(&p1, 0.0, 1.0, c(2.0, 0.0)).unwrap();
        assert!((y2.y(0).value() - 1f64.sin()).norm() < 1e-10);
    }

    #[test]
    fn large_lambda_does_not_overflow() {
        let p = Problem::simple("0").unwrap();
        let ch = solve_chain(&p, c(0.0, 1e6), ChainKind::Phi, 0, &[]).unwrap();
        let k = c(0.0, 1e6).sqrt();
        let est = k.im * PI - 2f64.ln();
        assert!((ch.last().y(0).ln_abs() - est).abs() < 1e-6);
    }

    #[test]
    fn riders_integrate_products() {
        let p = Problem::simple("0").unwrap();
        let track = Track { problem: &p, init: vec![(ONE, ZERO)] };
        let rider = Rider { a: (0, 0), b: (0, 0), weight: Weight::One };
        let snaps = run(&Settings::default(), c(1.0, 0.0), &[track], &[rider], 0.0, PI, &[]).unwrap();
        // integral of cos^2 over [0, pi]
        assert!((snaps.last().unwrap().riders[0].value() - PI / 2.0).norm() < 1e-10);
        let q = PotentialExpr::parse("x").unwrap();
        let p2 = Problem::simple("0").unwrap().with_q(q);
        let tr = [
            Track { problem: &p, init: vec![(ONE, ZERO)] },
            Track { problem: &p2, init: vec![(ONE, ZERO)] },
        ];
        let rider = Rider { a: (0, 0), b: (1, 0), weight: Weight::QDiff };
        let snaps = run(&Settings::default(), c(0.0, 0.0), &tr, &[rider], 0.0, 1.0, &[]).unwrap();
        // lambda = 0: y_a = 1, integral of x * y_b where y_b solves y'' = x y
        let last = snaps.last().unwrap();
        let w = last.tracks[0].bracket(0, &last.tracks[1], 0);
        assert!((w - last.riders[0]).abs() < 1e-10);
    }
}

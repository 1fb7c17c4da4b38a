//! Characteristic functions `Delta`, `Delta_inf`, the Weyl function and the
//! pair functions `F = <phi_A, phi_B>`, `F1`, `F2`.
//!
//! `Delta(lambda) = phi'(pi) + H phi(pi)` and `Delta_inf(lambda) = -phi(pi)`.
//! For a problem with a Dirichlet condition at `pi` the two coincide and
//! `delta` reports `Delta_inf`.

use crate::engine::{self, initial_data, ChainKind, ChainState, Rider, Track, Weight};
use crate::error::{Error, Result};
use crate::ode::Settings;
use crate::problem::{BoundaryAtPi, Problem, Side};
use crate::scaled::Scaled;
use num_complex::Complex64;
use std::f64::consts::PI;

type C64 = Complex64;

/// Which boundary value problem: `B` (the problem's own condition at `pi`) or
/// `B_inf` (Dirichlet at `pi`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Which {
    B,
    BInf,
}

#[derive(Clone, Debug)]
pub struct CharSample {
    pub lambda: C64,
    pub delta: Scaled,
    pub delta_inf: Scaled,
    /// `Delta^{(j)}(lambda)` for `j = 0..=k`.
    pub derivatives: Vec<Scaled>,
    /// `Delta_inf^{(j)}(lambda)` for `j = 0..=k`.
    pub derivatives_inf: Vec<Scaled>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `Delta_which^{(j)}` for `j = 0..=k` from a `phi` chain state at `pi`.
pub(crate) fn derivatives_from_phi(problem: &Problem, which: Which, end: &ChainState) -> Vec<Scaled> {
    (0..end.values.len())
        .map(|j| {
            let (v, dv) = end.values[j];
            let raw = match (which, problem.big_h) {
                (Which::B, BoundaryAtPi::Robin(hh)) => dv + hh * v,
                _ => -v,
            };
            Scaled::new(raw * factorial(j), end.log_scale)
        })
        .collect()
}

pub fn char_delta(problem: &Problem, lambda: C64, k: usize) -> Result<CharSample> {
    char_delta_with(&Settings::default(), problem, lambda, k)
}

pub fn char_delta_with(settings: &Settings, problem: &Problem, lambda: C64, k: usize) -> Result<CharSample> {
    let end = engine::phi_at_pi(settings, problem, lambda, k)?;
    let derivatives = derivatives_from_phi(problem, Which::B, &end);
    let derivatives_inf = derivatives_from_phi(problem, Which::BInf, &end);
    Ok(CharSample { lambda, delta: derivatives[0], delta_inf: derivatives_inf[0], derivatives, derivatives_inf })
}

/// `Delta_which^{(j)}(lambda)`, `j = 0..=k`.
pub fn char_value(settings: &Settings, problem: &Problem, which: Which, lambda: C64, k: usize) -> Result<Vec<Scaled>> {
    let end = engine::phi_at_pi(settings, problem, lambda, k)?;
    Ok(derivatives_from_phi(problem, which, &end))
}

/// `-U(psi) = -(psi'(0) - h psi(0))`, the second route to `Delta` (or to
/// `Delta_inf` when `which` is `BInf`).
pub fn delta_from_psi(problem: &Problem, which: Which, lambda: C64) -> Result<Scaled> {
    let kind = match which {
        Which::B => ChainKind::Psi,
        Which::BInf => ChainKind::PsiInf,
    };
    let ch = engine::solve_chain(problem, lambda, kind, 0, &[])?;
    let s = ch.first();
    let (v, dv) = s.values[0];
    Ok(Scaled::new(-(dv - problem.h * v), s.log_scale))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeylValue {
    Finite(C64),
    Pole,
}

/// `M = Delta_inf / Delta`, or [`WeylValue::Pole`] when
/// `|Delta| < 1e-10 (1 + |Delta_inf|)`.
pub fn weyl_m(problem: &Problem, lambda: C64) -> Result<WeylValue> {
    let s = char_delta(problem, lambda, 0)?;
    let scale = Scaled::ONE + Scaled::from(s.delta_inf.abs());
    if s.delta.is_zero() || s.delta.ln_abs() < (1e-10f64).ln() + scale.ln_abs() {
        return Ok(WeylValue::Pole);
    }
    Ok(WeylValue::Finite((s.delta_inf / s.delta).value()))
}

/// Where the pair bracket is evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EvalPoint {
    Pi,
    B(f64),
    /// `d+0`, the same as `B(d)`.
    DJump,
}

#[derive(Clone, Debug)]
pub struct PairSample {
    pub lambda: C64,
    pub f: Scaled,
    pub f1: Scaled,
    pub f2: Scaled,
    pub x: f64,
    pub side: Side,
}

/// Change of `<y, z>` across a jump when `y` jumps with `(beta_a, gamma_a)`
/// and `z` with `(beta_b, gamma_b)`, from the values at `d-0`.
pub fn jump_term(
    (beta_a, gamma_a): (f64, C64),
    (beta_b, gamma_b): (f64, C64),
    y: &ChainState,
    z: &ChainState,
) -> Scaled {
    let (yv, yd) = y.values[0];
    let (zv, zd) = z.values[0];
    let m = yv * zd * (beta_a / beta_b - 1.0) - yd * zv * (beta_b / beta_a - 1.0)
        + yv * zv * (gamma_b * beta_a - gamma_a * beta_b);
    Scaled::new(m, y.log_scale + z.log_scale)
}

pub(crate) struct PairRun {
    pub snaps: Vec<engine::Snapshot>,
}

impl PairRun {
    pub fn at(&self, x: f64, side: Side) -> &engine::Snapshot {
        let hits: Vec<&engine::Snapshot> = self.snaps.iter().filter(|s| s.x == x).collect();
        if hits.len() == 1 {
            return hits[0];
        }
        hits.into_iter().find(|s| s.side == side).expect("snapshot requested at a known point")
    }

    pub fn last(&self) -> &engine::Snapshot {
        self.snaps.last().unwrap()
    }
}

/// Integrates `phi_A` and `phi_B` together from `0` to `pi`, with the riders
/// `int (q_B - q_A) phi_A phi_B` and `int |q_B - q_A| |phi_A| |phi_B|`.
pub(crate) fn pair_run(settings: &Settings, a: &Problem, b: &Problem, lambda: C64, outputs: &[f64]) -> Result<PairRun> {
    let tracks = [
        Track { problem: a, init: initial_data(a, ChainKind::Phi, 0).1 },
        Track { problem: b, init: initial_data(b, ChainKind::Phi, 0).1 },
    ];
    let riders = [
        Rider { a: (0, 0), b: (1, 0), weight: Weight::QDiff },
        Rider { a: (0, 0), b: (1, 0), weight: Weight::AbsQDiff },
    ];
    Ok(PairRun { snaps: engine::run(settings, lambda, &tracks, &riders, 0.0, PI, outputs)? })
}

fn differences(sa: &ChainState, sb: &ChainState) -> (Scaled, Scaled) {
    (sa.y(0) - sb.y(0), sa.dy(0) - sb.dy(0))
}

pub fn f_function(a: &Problem, b: &Problem, lambda: C64, at: EvalPoint) -> Result<PairSample> {
    f_function_with(&Settings::default(), a, b, lambda, at)
}

pub fn f_function_with(settings: &Settings, a: &Problem, b: &Problem, lambda: C64, at: EvalPoint) -> Result<PairSample> {
    let at = match at {
        EvalPoint::DJump => EvalPoint::B(a.d),
        other => other,
    };
    match at {
        EvalPoint::Pi => {
            let run = pair_run(settings, a, b, lambda, &[])?;
            let end = run.last();
            let (f1, f2) = differences(&end.tracks[0], &end.tracks[1]);
            Ok(PairSample {
                lambda,
                f: end.tracks[0].bracket(0, &end.tracks[1], 0),
                f1,
                f2,
                x: PI,
                side: Side::Interior,
            })
        }
        EvalPoint::B(x) => {
            if a.d != b.d {
                return Err(Error::Precondition("evaluation away from pi needs a shared d".into()));
            }
            if !(x > 0.0 && x <= PI) {
                return Err(Error::OutOfDomain(x));
            }
            let d = a.d;
            let run = pair_run(settings, a, b, lambda, &[x])?;
            let side = if x == d { Side::Right } else { Side::Interior };
            let s = run.at(x, side);
            let (ya, yb) = (&s.tracks[0], &s.tracks[1]);
            let mut f = ya.bracket(0, yb, 0);
            if x < d {
                let dm = run.at(d, Side::Left);
                f = f + jump_term((a.beta, a.gamma), (b.beta, b.gamma), &dm.tracks[0], &dm.tracks[1]);
            }
            let (f1, f2) = differences(ya, yb);
            Ok(PairSample { lambda, f, f1, f2, x, side })
        }
        EvalPoint::DJump => unreachable!(),
    }
}

/// `F(lambda)` through the Lagrange identity:
/// `(h_B - h_A) + int_0^pi (q_B - q_A) phi_A phi_B dx` plus the bracket
/// changes at the jump points. Free of the cancellation that the direct
/// bracket suffers along the imaginary axis.
pub fn f_integral(a: &Problem, b: &Problem, lambda: C64) -> Result<Scaled> {
    f_integral_with(&Settings::default(), a, b, lambda)
}

pub fn f_integral_with(settings: &Settings, a: &Problem, b: &Problem, lambda: C64) -> Result<Scaled> {
    let run = pair_run(settings, a, b, lambda, &[])?;
    Ok(integral_route(a, b, &run, PI))
}

/// `<phi_A, phi_B>` at `x` (right-hand value at jump points) assembled from
/// the rider and the jump terms of an existing pair run.
pub(crate) fn integral_route(a: &Problem, b: &Problem, run: &PairRun, x: f64) -> Scaled {
    let mut f = Scaled::from(b.h - a.h);
    let end = run.snaps.iter().rev().find(|s| s.x == x && s.side != Side::Left).expect("x is a snapshot");
    f = f + end.riders[0];
    for (dj, pa, pb) in jumps_below(a, b, x) {
        let dm = run.at(dj, Side::Left);
        f = f + jump_term(pa, pb, &dm.tracks[0], &dm.tracks[1]);
    }
    f
}

/// Jump points below `x` with the `(beta, gamma)` each problem applies there.
fn jumps_below(a: &Problem, b: &Problem, x: f64) -> Vec<(f64, (f64, C64), (f64, C64))> {
    let pts: Vec<f64> = if a.d == b.d { vec![a.d] } else { vec![a.d, b.d] };
    let params = |p: &Problem, dj: f64| if p.d == dj { (p.beta, p.gamma) } else { (1.0, C64::new(0.0, 0.0)) };
    pts.into_iter().filter(|&dj| dj < x).map(|dj| (dj, params(a, dj), params(b, dj))).collect()
}

/// Sum of the magnitudes of the terms [`integral_route`] adds up, the scale
/// against which its result is measured.
pub(crate) fn integral_route_scale(a: &Problem, b: &Problem, run: &PairRun, x: f64) -> Scaled {
    let mut s = Scaled::from((b.h - a.h).norm());
    let end = run.snaps.iter().rev().find(|s| s.x == x && s.side != Side::Left).expect("x is a snapshot");
    s = s + end.riders[1];
    for (dj, pa, pb) in jumps_below(a, b, x) {
        let dm = run.at(dj, Side::Left);
        let j = jump_term(pa, pb, &dm.tracks[0], &dm.tracks[1]);
        if !j.is_zero() {
            s = s + Scaled::new(C64::new(1.0, 0.0), j.ln_abs());
        }
    }
    s
}

/// `F^{(k)}(lambda)` for `k = 0..=order` via `k! sum_j <phi_{A,j}, phi_{B,k-j}>` at `pi`.
pub fn f_derivatives(a: &Problem, b: &Problem, lambda: C64, order: usize) -> Result<Vec<Scaled>> {
    let tracks = [
        Track { problem: a, init: initial_data(a, ChainKind::Phi, order).1 },
        Track { problem: b, init: initial_data(b, ChainKind::Phi, order).1 },
    ];
    let snaps = engine::run(&Settings::default(), lambda, &tracks, &[], 0.0, PI, &[])?;
    let end = snaps.last().unwrap();
    Ok((0..=order)
        .map(|k| {
            let mut s = Scaled::ZERO;
            for j in 0..=k {
                s = s + end.tracks[0].bracket(j, &end.tracks[1], k - j);
            }
            s * factorial(k)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn neumann_closed_forms() {
        let p = Problem::simple("0").unwrap();
        let s = char_delta(&p, c(0.25, 0.0), 1).unwrap();
        assert!((s.delta.value() - c(-0.5, 0.0)).norm() < 1e-10);
        assert!(s.delta_inf.value().norm() < 1e-10);
        let pj = Problem::simple("0").unwrap().with_jump(2.0, c(0.0, 0.0), PI / 2.0).unwrap();
        let s = char_delta(&pj, c(0.25, 0.0), 0).unwrap();
        assert!((s.delta.value() - c(-0.625, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn weyl_function() {
        let p = Problem::simple("0").unwrap();
        match weyl_m(&p, c(0.25, 0.0)).unwrap() {
            WeylValue::Finite(m) => assert!(m.norm() < 1e-10),
            WeylValue::Pole => panic!("not a pole"),
        }
        assert_eq!(weyl_m(&p, c(4.0, 0.0)).unwrap(), WeylValue::Pole);
        let lam = c(2.0, 1.0);
        let k = lam.sqrt();
        let expect = (k * PI).cos() / (k * (k * PI).sin());
        match weyl_m(&p, lam).unwrap() {
            WeylValue::Finite(m) => assert!((m - expect).norm() < 1e-9),
            WeylValue::Pole => panic!(),
        }
    }

    #[test]
    fn pair_functions() {
        let a = Problem::simple("0").unwrap();
        let b = Problem::simple("0").unwrap().with_h(c(1.0, 0.0));
        for lam in [c(0.3, 0.0), c(5.0, -2.0), c(-3.0, 1.0)] {
            let s = f_function(&a, &b, lam, EvalPoint::Pi).unwrap();
            assert!((s.f.value() - 1.0).norm() < 1e-9);
            assert!((f_integral(&a, &b, lam).unwrap().value() - 1.0).norm() < 1e-12);
        }
        let s = f_function(&a, &a, c(3.0, 1.0), EvalPoint::Pi).unwrap();
        assert!(s.f.is_zero() && s.f1.is_zero() && s.f2.is_zero());
    }

    #[test]
    fn b_on_dirichlet_problem_is_delta_inf() {
        let p = Problem::simple("0").unwrap().with_big_h(BoundaryAtPi::Dirichlet);
        let s = char_delta(&p, c(0.25, 0.0), 0).unwrap();
        assert!(s.delta.value().norm() < 1e-10);
        assert_eq!(s.delta.value(), s.delta_inf.value());
    }
}

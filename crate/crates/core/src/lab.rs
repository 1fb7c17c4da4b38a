//! Uniqueness experiments on a pair of problems `A`, `B` whose potentials
//! agree on `[b, pi]`.
//!
//! * [`ray_decay_probe`] measures the decay of `F(iy)` against
//!   `|y|^{-(m+1)/2} exp(2 |Im sqrt(iy)| b)`.
//! * [`bracket_consistency`] evaluates `F` by every formula that applies and
//!   reports the largest disagreement.
//! * [`ratio_probe`] divides `F` (or `F1`, or `F / phi(b)`) by a
//!   product over selected eigenvalues of `A` and reports whether the ratio
//!   decreases along the imaginary axis.
//!
//! `F` is always taken through the integral route, since the direct bracket
//! loses `exp(2 |Im sqrt(lambda)| (pi - b))` to cancellation on the ray.

use crate::asymptotics::{check_matching, ls_slope};
use crate::charfn::{integral_route, integral_route_scale, jump_term, pair_run, PairRun, Which};
use crate::contour::Analytic;
use crate::entire::{geometric_ray, two_spectra_coefficients, check_counting_bound, SequenceProduct};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::norming::relative_residual;
use crate::ode::Settings;
use crate::problem::{Piece, PotentialExpr, Problem, Side};
use crate::scaled::Scaled;
use crate::spectrum::{find_eigenvalues, multiplicity_probe, ZeroSequence};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

type C64 = Complex64;

/// `qA = qB` is checked at this many points of `[b, pi]`.
const AGREEMENT_SAMPLES: usize = 401;
/// Radius of the contour used to confirm selected eigenvalues.
const PROBE_RADIUS: f64 = 0.05;

/// `B` = `A` with `(x - b)^{m+1} w(x)` added on `[0, b)`. The potentials then
/// agree on `[b, pi]` and their derivatives of order `<= m` match at `b`.
pub fn splice(base: &Problem, b: f64, m: i32, w: &str) -> Result<Problem> {
    if !(b > 0.0 && b <= PI) {
        return Err(Error::OutOfDomain(b));
    }
    if m < -1 {
        return Err(Error::InvalidArgument(format!("m must be at least -1, got {m}")));
    }
    let w = crate::expr::parse(w)?;
    let bump = if m == -1 {
        w
    } else {
        let shift = Expr::Sub(Box::new(Expr::X), Box::new(Expr::real(b)));
        Expr::Mul(Box::new(Expr::Pow(Box::new(shift), (m + 1) as u32)), Box::new(w))
    };
    let bumped = |e: &Expr| Expr::Add(Box::new(e.clone()), Box::new(bump.clone()));
    let mut pieces = Vec::new();
    for p in base.q.pieces() {
        if p.hi <= b {
            pieces.push(Piece { lo: p.lo, hi: p.hi, expr: bumped(&p.expr) });
        } else if p.lo >= b {
            pieces.push(p.clone());
        } else {
            pieces.push(Piece { lo: p.lo, hi: b, expr: bumped(&p.expr) });
            pieces.push(Piece { lo: b, hi: p.hi, expr: p.expr.clone() });
        }
    }
    Ok(base.clone().with_q(PotentialExpr::from_pieces(pieces)?))
}

/// Part of a spectrum of `A`: the whole of it, minus `removed`, with the
/// entries of `repeated` counted `k` extra times.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Selection {
    pub removed: Vec<C64>,
    pub repeated: Vec<(C64, usize)>,
}

impl Selection {
    pub fn full() -> Self {
        Self::default()
    }

    /// The spectrum without its entries at `removed`.
    pub fn without(removed: &[C64]) -> Self {
        Selection { removed: removed.to_vec(), repeated: Vec::new() }
    }

    fn extra(&self) -> Vec<C64> {
        self.repeated.iter().flat_map(|&(z, k)| std::iter::repeat(z).take(k)).collect()
    }
}

/// Two problems that agree on `[b, pi]`, the smoothness order `m` of the
/// agreement at `b`, and the eigenvalue selections `W` (from `sigma(B)` of
/// `A`) and `W_inf` (from `sigma(B_inf)` of `A`).
#[derive(Clone, Debug)]
pub struct PairExperiment {
    a: Problem,
    b: Problem,
    b_point: f64,
    m: i32,
    w: Option<Selection>,
    w_inf: Option<Selection>,
}

fn close(u: C64, v: C64) -> bool {
    (u - v).norm() <= 1e-6 * (1.0 + u.norm())
}

impl PairExperiment {
    pub fn new(a: Problem, b: Problem, b_point: f64, m: i32) -> Result<Self> {
        if !(b_point > 0.0 && b_point <= PI) {
            return Err(Error::OutOfDomain(b_point));
        }
        if m < -1 {
            return Err(Error::InvalidArgument(format!("m must be at least -1, got {m}")));
        }
        for i in 0..AGREEMENT_SAMPLES {
            let x = b_point + (PI - b_point) * i as f64 / (AGREEMENT_SAMPLES - 1) as f64;
            let side = if i == 0 { Side::Right } else { Side::Interior };
            let (qa, qb) = (a.q.eval(x, side)?, b.q.eval(x, side)?);
            if (qa - qb).norm() > 1e-12 * (1.0 + qa.norm()) {
                return Err(Error::Precondition(format!("potentials differ at x = {x} inside [b, pi]")));
            }
        }
        Ok(PairExperiment { a, b, b_point, m, w: None, w_inf: None })
    }

    /// Attaches eigenvalue selections after confirming with contour counts
    /// that every removed or repeated entry is an eigenvalue of `A` and that
    /// repeat counts satisfy `1 <= k <= multiplicity`.
    pub fn with_selections(mut self, w: Option<Selection>, w_inf: Option<Selection>) -> Result<Self> {
        for (sel, which) in [(&w, Which::B), (&w_inf, Which::BInf)] {
            let Some(sel) = sel else { continue };
            let mut points: Vec<C64> = sel.removed.clone();
            points.extend(sel.repeated.iter().map(|r| r.0));
            for z in points {
                let mult = multiplicity_probe(&self.a, which, z, PROBE_RADIUS)?;
                let removed = sel.removed.iter().filter(|r| close(**r, z)).count();
                if mult == 0 || removed > mult {
                    return Err(Error::Precondition(format!(
                        "{z} is removed {removed} times but has multiplicity {mult}"
                    )));
                }
            }
            for &(z, k) in &sel.repeated {
                let mult = multiplicity_probe(&self.a, which, z, PROBE_RADIUS)?;
                if k < 1 || k > mult {
                    return Err(Error::Precondition(format!("repeat count {k} at {z} outside 1..={mult}")));
                }
                if sel.removed.iter().any(|r| close(*r, z)) {
                    return Err(Error::Precondition(format!("{z} is both removed and repeated")));
                }
            }
        }
        self.w = w;
        self.w_inf = w_inf;
        Ok(self)
    }

    pub fn problem_a(&self) -> &Problem {
        &self.a
    }

    pub fn problem_b(&self) -> &Problem {
        &self.b
    }

    pub fn b_point(&self) -> f64 {
        self.b_point
    }

    pub fn m(&self) -> i32 {
        self.m
    }

    pub fn w(&self) -> Option<&Selection> {
        self.w.as_ref()
    }

    pub fn w_inf(&self) -> Option<&Selection> {
        self.w_inf.as_ref()
    }

    fn require_b_beyond_jumps(&self) -> Result<()> {
        if !(self.b_point > self.a.d && self.b_point > self.b.d) {
            return Err(Error::Precondition(format!("b = {} must exceed the jump points", self.b_point)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RayDecayOptions {
    pub ys: Vec<f64>,
    pub settings: Settings,
}

impl Default for RayDecayOptions {
    fn default() -> Self {
        RayDecayOptions { ys: geometric_ray(2.0, 6.0, 3), settings: Settings::tight() }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RayDecaySample {
    pub y: f64,
    pub ln_abs: f64,
    /// `ln |F(iy)| - 2 Im sqrt(iy) b`.
    pub ln_normalized: f64,
    pub below_floor: bool,
}

#[derive(Clone, Debug)]
pub struct RayDecayFit {
    pub m: i32,
    /// `-(m+1)/2`.
    pub bound_exponent: f64,
    pub samples: Vec<RayDecaySample>,
    /// Slope of `ln_normalized` against `ln y` over samples above the floor.
    pub slope: Option<f64>,
    pub identically_zero: bool,
    /// Normalized values strictly decrease along the ray.
    pub tail_decreasing: bool,
    pub pass: bool,
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Samples `F(iy)` and checks `|F(iy)| = o(|y|^{-(m+1)/2} exp(2 |Im sqrt(iy)| b))`
/// by requiring the fitted slope to be at most `-(m+1)/2 + 0.15`. For
/// `m = -1` the bound is `o(1)` and the normalized values must also decrease.
pub fn ray_decay_probe(exp: &PairExperiment, opts: &RayDecayOptions) -> Result<RayDecayFit> {
    exp.require_b_beyond_jumps()?;
    check_matching(&exp.a, &exp.b, exp.b_point, exp.m, 0.0)?;
    let b = exp.b_point;
    let floor = (1e3 * f64::EPSILON).ln();
    let samples = opts
        .ys
        .par_iter()
        .map(|&y| {
            let lambda = C64::new(0.0, y);
            let run = pair_run(&opts.settings, &exp.a, &exp.b, lambda, &[])?;
            let f = integral_route(&exp.a, &exp.b, &run, PI);
            let scale = integral_route_scale(&exp.a, &exp.b, &run, PI);
            let ln_abs = f.ln_abs();
            Ok(RayDecaySample {
                y,
                ln_abs,
                ln_normalized: ln_abs - 2.0 * lambda.sqrt().im * b,
                below_floor: f.is_zero() || ln_abs < floor + scale.ln_abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let kept: Vec<&RayDecaySample> = samples.iter().filter(|s| !s.below_floor).collect();
    let bound_exponent = -(exp.m as f64 + 1.0) / 2.0;
    let identically_zero = samples.iter().all(|s| s.ln_abs == f64::NEG_INFINITY);
    let slope = (kept.len() >= 3).then(|| ls_slope(&kept.iter().map(|s| (s.y.ln(), s.ln_normalized)).collect::<Vec<_>>()));
    let tail_decreasing = strictly_decreasing(&kept.iter().map(|s| s.ln_normalized).collect::<Vec<_>>());
    let pass = match slope {
        None => true,
        Some(s) => s <= bound_exponent + 0.15 && (exp.m >= 0 || tail_decreasing),
    };
    Ok(RayDecayFit { m: exp.m, bound_exponent, samples, slope, identically_zero, tail_decreasing, pass })
}

/// Twenty points `k^2` with `k = a + ib`, `a` in `{0.7, 2.3, 4.1, 6.2, 7.9}`
/// and `b` in `{-0.8, -0.2, 0.3, 0.9}`. Keeping `|Im k| < 1` bounds the
/// cancellation in the direct brackets at `pi` by about `exp(2 pi)`.
pub fn bracket_grid() -> Vec<C64> {
    let mut out = Vec::new();
    for a in [0.7, 2.3, 4.1, 6.2, 7.9] {
        for b in [-0.8, -0.2, 0.3, 0.9] {
            out.push(C64::new(a, b) * C64::new(a, b));
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct BracketReport {
    /// Names of the formulas compared.
    pub formulas: Vec<String>,
    /// Worst pairwise relative gap at each sample.
    pub per_lambda: Vec<(C64, f64)>,
    pub worst: f64,
}

/// `<phi_A, phi_B>` at `x` from the right, plus the bracket change across
/// the shared jump when `x` lies before it.
fn bracket_at(exp: &PairExperiment, run: &PairRun, x: f64) -> Scaled {
    let d = exp.a.d;
    let s = run.at(x, Side::Right);
    let mut f = s.tracks[0].bracket(0, &s.tracks[1], 0);
    if x < d {
        let dm = run.at(d, Side::Left);
        f = f + jump_term((exp.a.beta, exp.a.gamma), (exp.b.beta, exp.b.gamma), &dm.tracks[0], &dm.tracks[1]);
    }
    f
}

/// Evaluates `F` at each `lambda` through the integral route and through
/// the bracket at every point of `[b, pi]` where the agreement makes it
/// equal to `F`: at `pi`, at `b` (plus the jump change when `b < d`), at
/// `d+0` when `b < d`, and midway between `b` and `pi`.
pub fn bracket_consistency(exp: &PairExperiment, lambdas: &[C64], settings: &Settings) -> Result<BracketReport> {
    if exp.a.d != exp.b.d {
        return Err(Error::Precondition("bracket formulas away from pi need a shared d".into()));
    }
    let (b, d) = (exp.b_point, exp.a.d);
    let mut points: Vec<(String, f64)> = vec![("bracket at b".into(), b)];
    if b < d {
        points.push(("bracket at d+0".into(), d));
    }
    if b < PI {
        points.push(("bracket midway to pi".into(), 0.5 * (b + PI)));
    }
    let mut outputs: Vec<f64> = points.iter().map(|p| p.1).collect();
    outputs.push(d);
    let mut formulas = vec!["integral route".to_string(), "bracket at pi".to_string()];
    formulas.extend(points.iter().map(|p| p.0.clone()));
    let per_lambda = lambdas
        .par_iter()
        .map(|&lambda| {
            let run = pair_run(settings, &exp.a, &exp.b, lambda, &outputs)?;
            let end = run.last();
            let mut values = vec![integral_route(&exp.a, &exp.b, &run, PI), end.tracks[0].bracket(0, &end.tracks[1], 0)];
            values.extend(points.iter().map(|p| bracket_at(exp, &run, p.1)));
            let mut worst: f64 = 0.0;
            for i in 0..values.len() {
                for j in i + 1..values.len() {
                    worst = worst.max(relative_residual(values[i], values[j]));
                }
            }
            Ok((lambda, worst))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = per_lambda.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(BracketReport { formulas, per_lambda, worst })
}

/// The quotient whose decay along the imaginary axis is examined.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RatioKind {
    /// `F / G` with the counting coefficients `(A, 2b/pi - A, -A/2 - (m+1)/2)`.
    F,
    /// `F1 / G`, `F1 = phi_A(b) - phi_B(b)`, with `(A, b/pi - A, -A/2 + eps)`.
    F1,
    /// `-F / (G phi_A(b))` with the same coefficients as `F1`.
    FOverPhi,
}

impl RatioKind {
    pub fn name(self) -> &'static str {
        match self {
            RatioKind::F => "f",
            RatioKind::F1 => "f1",
            RatioKind::FOverPhi => "f-over-phi",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [RatioKind::F, RatioKind::F1, RatioKind::FOverPhi].into_iter().find(|k| k.name() == s)
    }
}

#[derive(Clone, Debug)]
pub struct RatioOptions {
    pub ys: Vec<f64>,
    /// Spectra of `A` are computed for `|lambda| <` this bound.
    pub spectrum_bound: f64,
    /// The free coefficient `A` of the counting inequality.
    pub a_coeff: f64,
    /// `eps` in the counting inequality of the `F1` and `FOverPhi` variants.
    pub epsilon: f64,
    /// The counting inequality is checked for `t` in
    /// `[t_lo_fraction * spectrum_bound, spectrum_bound]`.
    pub t_lo_fraction: f64,
    pub settings: Settings,
}

impl Default for RatioOptions {
    fn default() -> Self {
        RatioOptions {
            ys: geometric_ray(3.0, 6.0, 3),
            spectrum_bound: 400.0,
            a_coeff: 1.0,
            epsilon: 0.0,
            t_lo_fraction: 0.25,
            settings: Settings::tight(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RatioSample {
    pub y: f64,
    pub ln_numerator: f64,
    pub ln_g: f64,
    pub ln_ratio: f64,
}

#[derive(Clone, Debug)]
pub struct RatioReport {
    pub kind: RatioKind,
    pub coefficients: (f64, f64, f64),
    /// `min_t (N_X - l1 N_B - l2 N_Binf - l3)` over the checked range.
    pub counting_margin: f64,
    pub samples: Vec<RatioSample>,
    pub slope: Option<f64>,
    pub identically_zero: bool,
    pub tail_decreasing: bool,
}

/// `spectrum` restricted by `sel`, with multiplicity.
fn selected(spectrum: &ZeroSequence, sel: &Selection) -> Result<Vec<C64>> {
    let mut left = spectrum.lambdas();
    for z in &sel.removed {
        let i = left.iter().position(|l| close(*l, *z)).ok_or_else(|| {
            Error::Precondition(format!("removed entry {z} is not among the computed eigenvalues"))
        })?;
        left.remove(i);
    }
    for &(z, k) in &sel.repeated {
        let l = *spectrum.lambdas().iter().find(|l| close(**l, z)).ok_or_else(|| {
            Error::Precondition(format!("repeated entry {z} is not among the computed eigenvalues"))
        })?;
        left.extend(std::iter::repeat(l).take(k));
    }
    Ok(left)
}

/// Checks the counting inequality for the selections of `exp` against
/// spectra of `A` computed up to `opts.spectrum_bound`, then samples the
/// ratio of `kind` along `lambda = iy`.
pub fn ratio_probe(exp: &PairExperiment, kind: RatioKind, opts: &RatioOptions) -> Result<RatioReport> {
    exp.require_b_beyond_jumps()?;
    if kind != RatioKind::F && exp.a.d != exp.b.d {
        return Err(Error::Precondition("values at b need a shared d".into()));
    }
    if exp.w.is_none() && exp.w_inf.is_none() {
        return Err(Error::Precondition("no eigenvalue selection attached".into()));
    }
    let b = exp.b_point;
    let coefficients = match kind {
        RatioKind::F => two_spectra_coefficients(opts.a_coeff, b, exp.m),
        _ => (opts.a_coeff, b / PI - opts.a_coeff, -opts.a_coeff / 2.0 + opts.epsilon),
    };
    let sigma_b = find_eigenvalues(&exp.a, Which::B, opts.spectrum_bound)?;
    let sigma_inf = find_eigenvalues(&exp.a, Which::BInf, opts.spectrum_bound)?;
    let mut x = Vec::new();
    if let Some(sel) = &exp.w {
        x.extend(selected(&sigma_b, sel)?);
    }
    if let Some(sel) = &exp.w_inf {
        x.extend(selected(&sigma_inf, sel)?);
    }
    let counting_margin = check_counting_bound(
        &ZeroSequence::from_values(&x),
        &sigma_b,
        &sigma_inf,
        coefficients,
        (opts.t_lo_fraction * opts.spectrum_bound, opts.spectrum_bound),
    );
    if counting_margin < 0.0 {
        return Err(Error::Precondition(format!(
            "selection falls short of the counting inequality by {}",
            -counting_margin
        )));
    }
    let mut factors = Vec::new();
    if let Some(sel) = &exp.w {
        factors.push(SequenceProduct::new(&exp.a, Which::B, &sel.removed, &sel.extra())?);
    }
    if let Some(sel) = &exp.w_inf {
        factors.push(SequenceProduct::new(&exp.a, Which::BInf, &sel.removed, &sel.extra())?);
    }
    let samples = opts
        .ys
        .par_iter()
        .map(|&y| {
            let lambda = C64::new(0.0, y);
            let mut g = Scaled::ONE;
            for f in &factors {
                g = g * f.value(lambda)?;
            }
            if g.is_zero() {
                return Err(Error::ProductVanishes(format!("{lambda}")));
            }
            let run = pair_run(&opts.settings, &exp.a, &exp.b, lambda, &[b])?;
            let f = integral_route(&exp.a, &exp.b, &run, PI);
            let at_b = run.at(b, Side::Right);
            let numerator = match kind {
                RatioKind::F => f,
                RatioKind::F1 => at_b.tracks[0].y(0) - at_b.tracks[1].y(0),
                RatioKind::FOverPhi => f / at_b.tracks[0].y(0),
            };
            let ln_numerator = numerator.ln_abs();
            Ok(RatioSample { y, ln_numerator, ln_g: g.ln_abs(), ln_ratio: ln_numerator - g.ln_abs() })
        })
        .collect::<Result<Vec<_>>>()?;
    let identically_zero = samples.iter().all(|s| s.ln_numerator == f64::NEG_INFINITY);
    let finite: Vec<(f64, f64)> =
        samples.iter().filter(|s| s.ln_ratio.is_finite()).map(|s| (s.y.ln(), s.ln_ratio)).collect();
    let slope = (finite.len() >= 3).then(|| ls_slope(&finite));
    let tail_decreasing = identically_zero || strictly_decreasing(&samples.iter().map(|s| s.ln_ratio).collect::<Vec<_>>());
    Ok(RatioReport { kind, coefficients, counting_margin, samples, slope, identically_zero, tail_decreasing })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splice_agrees_beyond_b() {
        let a = Problem::simple("cos(x)").unwrap();
        let b = splice(&a, 2.0, 1, "1").unwrap();
        assert_eq!(b.q.eval(2.5, Side::Interior).unwrap(), a.q.eval(2.5, Side::Interior).unwrap());
        let e = b.q.eval(1.0, Side::Interior).unwrap() - a.q.eval(1.0, Side::Interior).unwrap();
        assert!((e - 1.0).norm() < 1e-15);
        assert!(PairExperiment::new(a.clone(), b.clone(), 2.0, 1).is_ok());
        assert!(matches!(PairExperiment::new(a, b, 1.5, 1), Err(Error::Precondition(_))));
    }

    #[test]
    fn splice_splits_pieces() {
        let a = Problem::simple("0").unwrap().with_q(PotentialExpr::piecewise(&[(0.0, 1.0, "1"), (1.0, PI, "x")]).unwrap());
        let b = splice(&a, 2.0, -1, "3").unwrap();
        assert_eq!(b.q.breakpoints(), vec![1.0, 2.0]);
        assert_eq!(b.q.eval(1.5, Side::Interior).unwrap(), C64::new(4.5, 0.0));
        assert_eq!(b.q.eval(0.5, Side::Interior).unwrap(), C64::new(4.0, 0.0));
    }

    #[test]
    fn ratio_kind_names_round_trip() {
        for k in [RatioKind::F, RatioKind::F1, RatioKind::FOverPhi] {
            assert_eq!(RatioKind::parse(k.name()), Some(k));
        }
    }
}

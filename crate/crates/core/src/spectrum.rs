//! Eigenvalues of `B` and `B_inf` by argument-principle subdivision and
//! Newton refinement on the characteristic function.

use crate::charfn::{char_value, Which};
use crate::contour::{count_with_nudge, multiplicity_on_circles, winding_rect, Analytic, Rect};
use crate::error::{Error, Result};
use crate::ode::Settings;
use crate::problem::Problem;
use crate::scaled::Scaled;
use num_complex::Complex64;
use rayon::prelude::*;
use std::cmp::Ordering;

type C64 = Complex64;

/// Tie-break used when two distinct entries have the same modulus.
pub const TIE_BREAK: &str = "ascending principal argument";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenRecord {
    pub lambda: C64,
    pub multiplicity: usize,
    /// `|Delta|` at the refined root.
    pub refined_residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    B,
    BInf,
    Synthetic,
}

/// Zeros ordered by modulus (then argument), each repeated per multiplicity.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroSequence {
    pub records: Vec<EigenRecord>,
    pub origin: Origin,
    /// Whether any two distinct entries share a modulus, so that the
    /// tie-break convention influenced the labelling.
    pub tie_broken: bool,
}

fn modulus_close(a: C64, b: C64) -> bool {
    (a.norm() - b.norm()).abs() <= 1e-10 * (1.0 + a.norm().max(b.norm()))
}

fn order(a: &C64, b: &C64) -> Ordering {
    if modulus_close(*a, *b) {
        a.arg().partial_cmp(&b.arg()).unwrap_or(Ordering::Equal)
    } else {
        a.norm().partial_cmp(&b.norm()).unwrap_or(Ordering::Equal)
    }
}

impl ZeroSequence {
    /// Builds a sequence from distinct roots with multiplicities.
    pub fn from_distinct(mut roots: Vec<EigenRecord>, origin: Origin) -> Self {
        roots.sort_by(|a, b| order(&a.lambda, &b.lambda));
        let tie_broken = roots.windows(2).any(|w| modulus_close(w[0].lambda, w[1].lambda));
        let records = roots.into_iter().flat_map(|r| std::iter::repeat(r).take(r.multiplicity)).collect();
        ZeroSequence { records, origin, tie_broken }
    }

    /// Builds a synthetic sequence from values; equal values count as one
    /// root of higher multiplicity.
    pub fn from_values(values: &[C64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(order);
        let mut roots: Vec<EigenRecord> = Vec::new();
        for v in sorted {
            match roots.last_mut() {
                Some(r) if r.lambda == v => r.multiplicity += 1,
                _ => roots.push(EigenRecord { lambda: v, multiplicity: 1, refined_residual: 0.0 }),
            }
        }
        Self::from_distinct(roots, Origin::Synthetic)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn lambdas(&self) -> Vec<C64> {
        self.records.iter().map(|r| r.lambda).collect()
    }

    /// One record per distinct eigenvalue.
    pub fn distinct(&self) -> Vec<EigenRecord> {
        let mut out: Vec<EigenRecord> = Vec::new();
        for r in &self.records {
            if out.last().map_or(true, |l| l.lambda != r.lambda) {
                out.push(*r);
            }
        }
        out
    }

    /// The sequence with its first `k` entries dropped.
    pub fn skip(&self, k: usize) -> ZeroSequence {
        ZeroSequence { records: self.records.iter().skip(k).copied().collect(), ..self.clone() }
    }
}

/// `N_X(t)`: entries with `|lambda| < t`, counted with multiplicity.
pub fn counting_function(seq: &ZeroSequence, t: f64) -> usize {
    seq.records.iter().filter(|r| r.lambda.norm() < t).count()
}

/// `Delta` (or `Delta_inf`) of a problem as an analytic function.
pub struct CharFunction<'a> {
    pub problem: &'a Problem,
    pub which: Which,
    pub settings: Settings,
}

impl<'a> CharFunction<'a> {
    pub fn new(problem: &'a Problem, which: Which) -> Self {
        CharFunction { problem, which, settings: Settings::default() }
    }
}

impl Analytic for CharFunction<'_> {
    fn value(&self, z: C64) -> Result<Scaled> {
        Ok(char_value(&self.settings, self.problem, self.which, z, 0)?[0])
    }

    fn with_derivative(&self, z: C64) -> Result<(Scaled, Scaled)> {
        let v = char_value(&self.settings, self.problem, self.which, z, 1)?;
        Ok((v[0], v[1]))
    }
}

pub fn count_zeros(problem: &Problem, which: Which, rect: &Rect) -> Result<i64> {
    Ok(count_with_nudge(&CharFunction::new(problem, which), rect)?.0)
}

pub fn multiplicity_probe(problem: &Problem, which: Which, lambda0: C64, radius: f64) -> Result<usize> {
    multiplicity_probe_fn(&CharFunction::new(problem, which), lambda0, radius)
}

pub fn multiplicity_probe_fn(f: &dyn Analytic, lambda0: C64, radius: f64) -> Result<usize> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument("radius must be positive".into()));
    }
    multiplicity_on_circles(f, lambda0, radius)
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    /// Half-height of the search strip.
    pub c_im: f64,
    /// Left edge; derived from the problem data when `None`.
    pub r_min: Option<f64>,
    pub max_boxes: usize,
    pub settings: Settings,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { c_im: 50.0, r_min: None, max_boxes: 20_000, settings: Settings::default() }
    }
}

/// Real parts of all eigenvalues exceed `-R0` by a crude energy estimate.
fn default_r0(problem: &Problem) -> f64 {
    let hh = match problem.big_h {
        crate::problem::BoundaryAtPi::Robin(v) => v.norm(),
        crate::problem::BoundaryAtPi::Dirichlet => 0.0,
    };
    let s = 1.0 + problem.h.norm() + hh + problem.gamma.norm() * (problem.beta + 1.0 / problem.beta);
    1.0 + problem.q_sup() + 2.0 * s * s
}

pub fn find_eigenvalues(problem: &Problem, which: Which, modulus_bound: f64) -> Result<ZeroSequence> {
    find_eigenvalues_with(problem, which, modulus_bound, &SearchOptions::default())
}

pub fn find_eigenvalues_with(
    problem: &Problem,
    which: Which,
    modulus_bound: f64,
    opts: &SearchOptions,
) -> Result<ZeroSequence> {
    let f = CharFunction { problem, which, settings: opts.settings.clone() };
    let r_min = match opts.r_min {
        Some(r) => r,
        None => left_edge(&f, default_r0(problem), opts.c_im)?,
    };
    let origin = match which {
        Which::B => Origin::B,
        Which::BInf => Origin::BInf,
    };
    let mut seq = find_zeros_fn(&f, r_min, modulus_bound, opts)?;
    seq.origin = origin;
    Ok(seq)
}

/// Pushes the left edge out until the strip to its left is zero-free.
fn left_edge(f: &dyn Analytic, r0: f64, c_im: f64) -> Result<f64> {
    let mut r = r0;
    for _ in 0..8 {
        let probe = Rect::new(-4.0 * r, -r, -c_im, c_im);
        if count_with_nudge(f, &probe)?.0 == 0 {
            return Ok(-r);
        }
        r *= 4.0;
    }
    Err(Error::Precondition("no zero-free left edge found".into()))
}

/// All zeros of `f` in the strip `[r_min, bound] x [-c_im, c_im]` with
/// modulus below `bound`.
pub fn find_zeros_fn(f: &dyn Analytic, r_min: f64, modulus_bound: f64, opts: &SearchOptions) -> Result<ZeroSequence> {
    if !(modulus_bound > 0.0) {
        return Err(Error::InvalidArgument("modulus bound must be positive".into()));
    }
    // Irregular offsets keep integer-valued zeros off the region boundary.
    let right = modulus_bound * 1.003_71 + 0.371;
    let region = Rect::new(r_min.min(-0.5), right, -opts.c_im, opts.c_im);
    let (total, region) = count_with_nudge(f, &region)?;
    let mut roots = Vec::new();
    let mut level = vec![(region, total)];
    let mut boxes = 0usize;
    while !level.is_empty() {
        boxes += level.len();
        if boxes > opts.max_boxes {
            let remaining = level.iter().map(|b| b.1).sum();
            return Err(Error::SubdivisionExhausted { remaining });
        }
        let results: Vec<Result<Step>> = level.par_iter().map(|(r, n)| process(f, r, *n)).collect();
        let mut next = Vec::new();
        for r in results {
            match r? {
                Step::Root(rec) => roots.push(rec),
                Step::Split(a, b) => next.extend([a, b].into_iter().filter(|b| b.1 > 0)),
            }
        }
        level = next;
    }
    let roots = merge(f, roots)?;
    let found: i64 = roots.iter().map(|r| r.multiplicity as i64).sum();
    if found != total {
        return Err(Error::Incomplete { expected: total, found });
    }
    let kept = roots.into_iter().filter(|r| r.lambda.norm() < modulus_bound).collect();
    Ok(ZeroSequence::from_distinct(kept, Origin::Synthetic))
}

enum Step {
    Root(EigenRecord),
    Split((Rect, i64), (Rect, i64)),
}

fn small(r: &Rect) -> bool {
    let c = r.center().norm();
    r.width().max(r.height()) < 1e-6 * (1.0 + c)
}

fn process(f: &dyn Analytic, rect: &Rect, count: i64) -> Result<Step> {
    if count == 1 || small(rect) {
        let m = count as usize;
        if let Some((z, res)) = newton(f, rect.center(), m, rect)? {
            if rect.expanded(1e-9 * (1.0 + z.norm())).contains(z) {
                return Ok(Step::Root(EigenRecord { lambda: z, multiplicity: m, refined_residual: res }));
            }
        }
        if small(rect) {
            return Err(Error::Refinement { start: format!("{}", rect.center()) });
        }
    }
    split(f, rect, count).map(|(a, b)| Step::Split(a, b))
}

fn split(f: &dyn Analytic, rect: &Rect, count: i64) -> Result<((Rect, i64), (Rect, i64))> {
    for t in [0.4987, 0.4713, 0.5291, 0.4419, 0.5563] {
        let (a, b) = if rect.width() >= rect.height() {
            let x = rect.re0 + t * rect.width();
            (Rect::new(rect.re0, x, rect.im0, rect.im1), Rect::new(x, rect.re1, rect.im0, rect.im1))
        } else {
            let y = rect.im0 + t * rect.height();
            (Rect::new(rect.re0, rect.re1, rect.im0, y), Rect::new(rect.re0, rect.re1, y, rect.im1))
        };
        let na = winding_rect(f, &a);
        let nb = winding_rect(f, &b);
        match (na, nb) {
            (Ok(na), Ok(nb)) if na + nb == count && na >= 0 && nb >= 0 => return Ok(((a, na), (b, nb))),
            (Err(e), _) | (_, Err(e)) if !matches!(e, Error::PhaseStep { .. }) => return Err(e),
            _ => continue,
        }
    }
    Err(Error::PhaseStep { at: format!("split of {rect:?}") })
}

/// Newton iteration with multiplicity `m`. Gives up (returning `None`) when
/// the iterate wanders far from the box.
fn newton(f: &dyn Analytic, z0: C64, m: usize, rect: &Rect) -> Result<Option<(C64, f64)>> {
    let diag = rect.width().hypot(rect.height());
    let centre = rect.center();
    let mut z = z0;
    let mut converged = 0;
    for _ in 0..80 {
        let (v, dv) = f.with_derivative(z)?;
        if v.is_zero() {
            return Ok(Some((z, 0.0)));
        }
        if dv.is_zero() {
            return Ok(None);
        }
        let step = (v / dv).value() * m as f64;
        if !(step.re.is_finite() && step.im.is_finite()) {
            return Ok(None);
        }
        z -= step;
        if (z - centre).norm() > 4.0 * diag + 1e-6 {
            return Ok(None);
        }
        if step.norm() <= 1e-14 * (1.0 + z.norm()) {
            converged += 1;
            if converged >= 2 || step.norm() == 0.0 {
                break;
            }
        }
    }
    if converged == 0 {
        return Ok(None);
    }
    let res = f.value(z)?.abs();
    Ok(Some((z, res)))
}

/// Merges roots closer than `1e-8 (1 + |lambda|)` and re-probes the joint
/// multiplicity.
fn merge(f: &dyn Analytic, mut roots: Vec<EigenRecord>) -> Result<Vec<EigenRecord>> {
    roots.sort_by(|a, b| a.lambda.re.partial_cmp(&b.lambda.re).unwrap_or(Ordering::Equal));
    let mut out: Vec<EigenRecord> = Vec::new();
    for r in roots {
        if let Some(prev) = out.iter_mut().find(|p| (p.lambda - r.lambda).norm() < 1e-8 * (1.0 + r.lambda.norm())) {
            let radius = 1e-6 * (1.0 + r.lambda.norm());
            prev.multiplicity = multiplicity_on_circles(f, prev.lambda, radius)?;
            continue;
        }
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::BoundaryAtPi;

    #[test]
    fn counts_and_probes() {
        let p = Problem::simple("0").unwrap();
        assert_eq!(count_zeros(&p, Which::B, &Rect::new(0.5, 4.5, -1.0, 1.0)).unwrap(), 2);
        assert_eq!(count_zeros(&p, Which::B, &Rect::new(0.5, 0.9, -1.0, 1.0)).unwrap(), 0);
        let dir = p.clone().with_big_h(BoundaryAtPi::Dirichlet);
        assert_eq!(count_zeros(&dir, Which::B, &Rect::new(0.0, 1.0, -1.0, 1.0)).unwrap(), 1);
        assert_eq!(multiplicity_probe(&p, Which::B, C64::new(4.0, 0.0), 0.1).unwrap(), 1);
        assert_eq!(multiplicity_probe(&p, Which::B, C64::new(2.5, 0.0), 0.1).unwrap(), 0);
    }

    #[test]
    fn neumann_spectrum() {
        let p = Problem::simple("0").unwrap();
        let s = find_eigenvalues(&p, Which::B, 30.0).unwrap();
        let l = s.lambdas();
        assert_eq!(l.len(), 6);
        for (n, z) in l.iter().enumerate() {
            assert!((z - C64::new((n * n) as f64, 0.0)).norm() < 1e-8, "{n}: {z}");
        }
        assert_eq!(counting_function(&s, 10.0), 4);
        assert_eq!(counting_function(&s, 0.0), 0);
    }

    #[test]
    fn synthetic_sequence_order() {
        let s = ZeroSequence::from_values(&[
            C64::new(2.0, 0.0),
            C64::new(0.0, 2.0),
            C64::new(1.0, 0.0),
            C64::new(2.0, 0.0),
        ]);
        assert_eq!(s.len(), 4);
        assert_eq!(s.distinct().len(), 3);
        assert_eq!(s.records[1].lambda, C64::new(2.0, 0.0));
        assert_eq!(s.records[2].lambda, C64::new(2.0, 0.0));
        assert!(s.tie_broken);
    }
}

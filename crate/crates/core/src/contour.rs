//! Winding numbers of analytic functions by phase tracking.
//!
//! The argument is continued along a sampled path; any pair of neighbouring
//! samples whose phase differs by `pi/2` or more is bisected until it does
//! not. The total change divided by `2 pi` is the number of enclosed zeros.

use crate::error::{Error, Result};
use crate::scaled::Scaled;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

type C64 = Complex64;

/// An analytic function that can be sampled (and differentiated) on demand.
pub trait Analytic: Sync {
    fn value(&self, z: C64) -> Result<Scaled>;
    /// `(f(z), f'(z))`.
    fn with_derivative(&self, z: C64) -> Result<(Scaled, Scaled)>;
}

/// Axis-aligned rectangle `[re0, re1] x [im0, im1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub re0: f64,
    pub re1: f64,
    pub im0: f64,
    pub im1: f64,
}

impl Rect {
    pub fn new(re0: f64, re1: f64, im0: f64, im1: f64) -> Self {
        Rect { re0, re1, im0, im1 }
    }

    pub fn width(&self) -> f64 {
        self.re1 - self.re0
    }

    pub fn height(&self) -> f64 {
        self.im1 - self.im0
    }

    pub fn center(&self) -> C64 {
        C64::new(0.5 * (self.re0 + self.re1), 0.5 * (self.im0 + self.im1))
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.re0 && z.re <= self.re1 && z.im >= self.im0 && z.im <= self.im1
    }

    pub fn expanded(&self, e: f64) -> Rect {
        Rect { re0: self.re0 - e, re1: self.re1 + e, im0: self.im0 - e, im1: self.im1 + e }
    }
}

const MAX_DEPTH: usize = 44;

fn wrap(d: f64) -> f64 {
    let mut d = d % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

fn sample(f: &dyn Analytic, z: C64) -> Result<f64> {
    let v = f.value(z)?;
    if v.is_zero() || !v.is_finite() {
        return Err(Error::PhaseStep { at: format!("{z}") });
    }
    Ok(v.arg())
}

fn refine(
    f: &dyn Analytic,
    path: &(dyn Fn(f64) -> C64 + Sync),
    (t0, a0): (f64, f64),
    (t1, a1): (f64, f64),
    depth: usize,
) -> Result<f64> {
    let d = wrap(a1 - a0);
    if d.abs() < 0.5 * PI {
        return Ok(d);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::PhaseStep { at: format!("{}", path(0.5 * (t0 + t1))) });
    }
    let tm = 0.5 * (t0 + t1);
    let am = sample(f, path(tm))?;
    Ok(refine(f, path, (t0, a0), (tm, am), depth + 1)? + refine(f, path, (tm, am), (t1, a1), depth + 1)?)
}

/// Total continuous change of `arg f` along `path(t)`, `t` in `[0, 1]`,
/// starting from `n` equispaced samples.
pub(crate) fn phase_change(f: &dyn Analytic, path: &(dyn Fn(f64) -> C64 + Sync), n: usize) -> Result<f64> {
    let n = n.max(2);
    let args: Vec<f64> = (0..=n)
        .into_par_iter()
        .map(|i| sample(f, path(i as f64 / n as f64)))
        .collect::<Result<_>>()?;
    let parts: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            refine(f, path, (i as f64 / n as f64, args[i]), ((i + 1) as f64 / n as f64, args[i + 1]), 0)
        })
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum())
}

/// Sample count for a segment: characteristic functions of order one half
/// change phase by about `pi / (2 sqrt|z|)` per unit of `z`.
fn samples_for(a: C64, b: C64) -> usize {
    let len = (b - a).norm();
    let ab = b - a;
    let t = if ab.norm_sqr() > 0.0 { (-(a.conj() * ab).re / ab.norm_sqr()).clamp(0.0, 1.0) } else { 0.0 };
    let dist = (a + ab * t).norm();
    let step = 0.5 * dist.sqrt().max(1.0);
    ((len / step).ceil() as usize).clamp(6, 50_000)
}

fn to_count(total: f64) -> Result<i64> {
    let w = total / (2.0 * PI);
    let r = w.round();
    if (w - r).abs() > 1e-6 {
        return Err(Error::PhaseStep { at: format!("winding {w}") });
    }
    Ok(r as i64)
}

/// Winding number of `f` around the counter-clockwise boundary of `rect`.
pub fn winding_rect(f: &dyn Analytic, rect: &Rect) -> Result<i64> {
    let corners = [
        C64::new(rect.re0, rect.im0),
        C64::new(rect.re1, rect.im0),
        C64::new(rect.re1, rect.im1),
        C64::new(rect.re0, rect.im1),
    ];
    let mut total = 0.0;
    for i in 0..4 {
        let (a, b) = (corners[i], corners[(i + 1) % 4]);
        let path = move |t: f64| if t >= 1.0 { b } else { a + (b - a) * t };
        total += phase_change(f, &path, samples_for(a, b))?;
    }
    to_count(total)
}

/// Winding number of `f` around the circle `|z - c| = r`.
pub fn winding_circle(f: &dyn Analytic, c: C64, r: f64) -> Result<i64> {
    let path = move |t: f64| c + C64::from_polar(r, 2.0 * PI * t.min(1.0));
    let p0 = path(0.0);
    let path = move |t: f64| if t >= 1.0 { p0 } else { path(t) };
    let n = ((2.0 * PI * r) / (0.5 * (c.norm() - r).max(1.0).sqrt())).ceil() as usize;
    to_count(phase_change(f, &path, n.clamp(16, 50_000))?)
}

/// Counts zeros inside `rect`, nudging the boundary outward when a zero sits
/// on (or too close to) it. Returns the count and the rectangle actually used.
pub fn count_with_nudge(f: &dyn Analytic, rect: &Rect) -> Result<(i64, Rect)> {
    let scale = 1.0 + rect.width().abs().max(rect.height().abs());
    let mut r = *rect;
    for k in 0..6 {
        match winding_rect(f, &r) {
            Ok(n) => return Ok((n, r)),
            Err(Error::PhaseStep { .. }) => {
                r = rect.expanded(scale * 1e-7 * 10f64.powi(k as i32) * (1.0 + 0.37 * k as f64));
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::BoundaryZero { nudges: 6 })
}

/// Winding counts on circles of radius `r`, `r/2`, `r/4`; they must agree.
pub fn multiplicity_on_circles(f: &dyn Analytic, c: C64, r: f64) -> Result<usize> {
    let counts = [winding_circle(f, c, r)?, winding_circle(f, c, 0.5 * r)?, winding_circle(f, c, 0.25 * r)?];
    if counts[0] != counts[1] || counts[1] != counts[2] || counts[0] < 0 {
        return Err(Error::UnstableMultiplicity { counts: counts.to_vec() });
    }
    Ok(counts[0] as usize)
}

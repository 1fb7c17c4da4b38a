//! Canonical products over zero sequences, Hadamard constants, growth fits
//! along the imaginary ray and counting-function bounds.

use crate::charfn::{char_value, Which};
use crate::contour::Analytic;
use crate::error::{Error, Result};
use crate::ode::Settings;
use crate::problem::Problem;
use crate::scaled::Scaled;
use crate::spectrum::{counting_function, EigenRecord, Origin, ZeroSequence};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

type C64 = Complex64;

/// Optional correction for the omitted factors `n >= N`:
/// `prod_{n >= N} (1 - lambda/lambda_n) ~ exp(-lambda * sum_{n >= N} 1/lambda_n)`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum TailCompensation {
    #[default]
    Off,
    /// `sum_{n >= N} 1/lambda_n`.
    Sum(C64),
}

/// `C * prod_{n < N} (1 - lambda/lambda_n)`.
#[derive(Clone, Debug)]
pub struct ProductModel {
    zeros: Vec<C64>,
    pub constant: C64,
    pub truncation: usize,
    pub tail: TailCompensation,
    /// `sum_{N/2 <= n < N} 1/lambda_n`, used to compensate the half product.
    half_gap: C64,
}

#[derive(Clone, Copy, Debug)]
pub struct ProductValue {
    /// With `N` factors.
    pub value: Scaled,
    /// With `N/2` factors, for convergence assessment.
    pub half: Scaled,
}

impl ProductModel {
    pub fn new(zeros: &ZeroSequence, constant: C64, truncation: usize) -> Result<Self> {
        Self::from_values(&zeros.lambdas(), constant, truncation)
    }

    pub fn from_values(zeros: &[C64], constant: C64, truncation: usize) -> Result<Self> {
        if truncation > zeros.len() {
            return Err(Error::InvalidArgument(format!(
                "truncation {truncation} exceeds the {} available zeros",
                zeros.len()
            )));
        }
        let zeros = zeros[..truncation].to_vec();
        if zeros.iter().any(|z| z.norm() == 0.0) {
            return Err(Error::ZeroInSequence);
        }
        let half_gap = zeros[truncation / 2..].iter().map(|z| z.inv()).sum();
        Ok(ProductModel { zeros, constant, truncation, tail: TailCompensation::Off, half_gap })
    }

    pub fn with_tail(mut self, tail: TailCompensation) -> Self {
        self.tail = tail;
        self
    }

    pub fn zeros(&self) -> &[C64] {
        &self.zeros
    }
}

pub fn truncated_product(model: &ProductModel, lambda: C64) -> ProductValue {
    let n = model.zeros.len();
    let mut acc = Scaled::from(model.constant);
    let mut half = acc;
    for (i, z) in model.zeros.iter().enumerate() {
        if i == n / 2 {
            half = acc;
        }
        acc = acc * (C64::new(1.0, 0.0) - lambda / z);
    }
    if n == 0 {
        half = acc;
    }
    if let TailCompensation::Sum(s) = model.tail {
        acc = acc * Scaled::exp(-lambda * s);
        half = half * Scaled::exp(-lambda * (s + model.half_gap));
    }
    ProductValue { value: acc, half }
}

impl Analytic for ProductModel {
    fn value(&self, z: C64) -> Result<Scaled> {
        Ok(truncated_product(self, z).value)
    }

    fn with_derivative(&self, z: C64) -> Result<(Scaled, Scaled)> {
        let v = self.value(z)?;
        // product rule, written so that an exact zero factor is handled
        let mut d = Scaled::ZERO;
        for (i, x) in self.zeros.iter().enumerate() {
            let mut term = Scaled::from(self.constant * (-x.inv()));
            for (j, y) in self.zeros.iter().enumerate() {
                if i != j {
                    term = term * (C64::new(1.0, 0.0) - z / y);
                }
            }
            d = d + term;
        }
        if let TailCompensation::Sum(s) = self.tail {
            let e = Scaled::exp(-z * s);
            d = d * e + v * (-s);
        }
        Ok((v, d))
    }
}

/// `sum_{n >= N} 1/((n + s)^2 + c)` by Euler-Maclaurin, for the synthetic
/// sequences `(n + s)^2 + c` with real `c > -(N + s)^2`.
pub fn shifted_square_tail(s: f64, c: f64, n: usize) -> f64 {
    let a = n as f64 + s;
    let integral = if c > 0.0 {
        (c.sqrt() / a).atan() / c.sqrt()
    } else if c < 0.0 {
        ((-c).sqrt() / a).atanh() / (-c).sqrt()
    } else {
        1.0 / a
    };
    let den = a * a + c;
    let f = 1.0 / den;
    let f1 = -2.0 * a / (den * den);
    let f3 = -24.0 * a * (a * a - c) / den.powi(4);
    integral + 0.5 * f - f1 / 12.0 + f3 / 720.0
}

/// `(n + s)^2 + c` for `n = 0..count`.
pub fn shifted_squares(s: f64, c: f64, count: usize) -> Vec<C64> {
    (0..count).map(|n| C64::new((n as f64 + s).powi(2) + c, 0.0)).collect()
}

#[derive(Clone, Debug)]
pub struct ConstantFit {
    /// `Delta(0)`.
    pub constant: C64,
    /// Componentwise median of `Delta(lambda) / G_N(lambda)` on the check circle.
    pub median_ratio: C64,
    /// `|median_ratio - constant| / |constant|`.
    pub discrepancy: f64,
    /// Truncation budget the discrepancy is compared with.
    pub budget: f64,
    pub within_budget: bool,
}

fn which_of(seq: &ZeroSequence) -> Result<Which> {
    match seq.origin {
        Origin::B => Ok(Which::B),
        Origin::BInf => Ok(Which::BInf),
        Origin::Synthetic => Err(Error::InvalidArgument("fit_constant needs a computed spectrum".into())),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Hadamard constant `C = Delta(0)` of a computed spectrum, cross-checked
/// against `Delta / G_N` on a circle inside the first zero.
pub fn fit_constant(problem: &Problem, seq: &ZeroSequence) -> Result<ConstantFit> {
    let which = which_of(seq)?;
    let settings = Settings::default();
    let delta = |z: C64| -> Result<Scaled> { Ok(char_value(&settings, problem, which, z, 0)?[0]) };
    let c0 = delta(C64::new(0.0, 0.0))?;
    let scale = delta(C64::new(1.0, 0.0))?.abs().max(1.0);
    if c0.abs() < 1e-10 * scale {
        return Err(Error::VanishingAtOrigin);
    }
    let constant = c0.value();
    let model = ProductModel::new(seq, C64::new(1.0, 0.0), seq.len())?;
    let r = 0.5 * seq.records.first().map_or(1.0, |e| e.lambda.norm());
    let pts: Vec<C64> = (0..8).map(|k| C64::from_polar(r, (k as f64 + 0.5) * PI / 4.0)).collect();
    let vals: Vec<(C64, f64)> = pts
        .par_iter()
        .map(|&z| {
            let g = truncated_product(&model, z);
            let ratio = (delta(z)? / g.value).value();
            let conv = ((g.value - g.half).abs() / g.value.abs()).min(1.0);
            Ok((ratio, conv))
        })
        .collect::<Result<_>>()?;
    let median_ratio =
        C64::new(median(vals.iter().map(|v| v.0.re).collect()), median(vals.iter().map(|v| v.0.im).collect()));
    let discrepancy = (median_ratio - constant).norm() / constant.norm();
    let budget = 4.0 * vals.iter().map(|v| v.1).fold(0.0, f64::max) + 1e-8;
    Ok(ConstantFit { constant, median_ratio, discrepancy, budget, within_budget: discrepancy <= budget })
}

/// Fit of `ln|f(iy)| = c sqrt(|y|/2) + p ln|y| + const`.
#[derive(Clone, Debug)]
pub struct GrowthFit {
    /// `(|y|, ln|f(iy)|)`.
    pub samples: Vec<(f64, f64)>,
    pub c: f64,
    pub p: f64,
    pub constant: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
}

impl GrowthFit {
    pub fn predict(&self, y: f64) -> f64 {
        self.c * (y.abs() / 2.0).sqrt() + self.p * y.abs().ln() + self.constant
    }
}

/// Which half of the imaginary axis a ray probe uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RaySide {
    #[default]
    Upper,
    Lower,
}

/// `y = 10^2, 10^2.5, ..., 10^6`.
pub fn standard_ray() -> Vec<f64> {
    (0..=8).map(|k| 10f64.powf(2.0 + 0.5 * k as f64)).collect()
}

/// Geometric samples `10^lo, ..., 10^hi` with `per_decade` points per decade.
pub fn geometric_ray(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let n = ((hi - lo) * per_decade as f64).round() as usize;
    (0..=n).map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / n as f64)).collect()
}

/// `(y, ln|f(+-iy)|)` for each `y > 0`.
pub fn sample_ray(
    f: &(dyn Fn(C64) -> Result<Scaled> + Sync),
    ys: &[f64],
    side: RaySide,
) -> Result<Vec<(f64, f64)>> {
    let sign = match side {
        RaySide::Upper => 1.0,
        RaySide::Lower => -1.0,
    };
    ys.par_iter().map(|&y| Ok((y, f(C64::new(0.0, sign * y))?.ln_abs()))).collect()
}

pub fn growth_fit(samples: &[(f64, f64)]) -> Result<GrowthFit> {
    if samples.len() < 8 {
        return Err(Error::DegenerateFit(format!("need at least 8 samples, got {}", samples.len())));
    }
    let ys: Vec<f64> = samples.iter().map(|s| s.0.abs()).collect();
    let (lo, hi) = ys.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &y| (a.min(y), b.max(y)));
    if !(lo > 0.0 && hi / lo >= 1e3 * (1.0 - 1e-12)) {
        return Err(Error::DegenerateFit("samples must span at least three decades of y".into()));
    }
    if samples.iter().any(|s| !s.1.is_finite()) {
        return Err(Error::DegenerateFit("non-finite sample".into()));
    }
    let a = DMatrix::from_fn(samples.len(), 3, |i, j| match j {
        0 => (ys[i] / 2.0).sqrt(),
        1 => ys[i].ln(),
        _ => 1.0,
    });
    let b = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.1));
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    if sv.min() <= 1e-12 * sv.max() {
        return Err(Error::DegenerateFit("design matrix is rank deficient".into()));
    }
    let x = svd.solve(&b, 1e-14).map_err(|e| Error::DegenerateFit(e.to_string()))?;
    let r = &a * &x - &b;
    let residual = (r.norm_squared() / samples.len() as f64).sqrt();
    Ok(GrowthFit { samples: samples.to_vec(), c: x[0], p: x[1], constant: x[2], residual })
}

/// Growth fit of `Delta` (or `Delta_inf`) along the upper imaginary ray.
pub fn char_growth(problem: &Problem, which: Which, ys: &[f64]) -> Result<GrowthFit> {
    let settings = Settings::default();
    let f = |z: C64| -> Result<Scaled> { Ok(char_value(&settings, problem, which, z, 0)?[0]) };
    growth_fit(&sample_ray(&f, ys, RaySide::Upper)?)
}

/// Union of sequences, counted with multiplicity.
pub fn merge_sequences(seqs: &[&ZeroSequence]) -> ZeroSequence {
    let recs: Vec<EigenRecord> = seqs.iter().flat_map(|s| s.records.iter().copied()).collect();
    let values: Vec<C64> = recs.iter().map(|r| r.lambda).collect();
    ZeroSequence::from_values(&values)
}

/// `min_t N_X(t) - l1 N_B(t) - l2 N_Binf(t) - l3` over `t` in `[t_lo, t_hi]`.
/// The counting functions are left-continuous step functions, so the minimum
/// is attained at `t_lo`, `t_hi` or at a modulus of some entry.
pub fn check_counting_bound(
    x: &ZeroSequence,
    sigma_b: &ZeroSequence,
    sigma_binf: &ZeroSequence,
    (l1, l2, l3): (f64, f64, f64),
    (t_lo, t_hi): (f64, f64),
) -> f64 {
    let mut ts = vec![t_lo, t_hi];
    for s in [x, sigma_b, sigma_binf] {
        ts.extend(s.records.iter().map(|r| r.lambda.norm()).filter(|&t| t > t_lo && t < t_hi));
    }
    ts.iter()
        .map(|&t| {
            counting_function(x, t) as f64
                - l1 * counting_function(sigma_b, t) as f64
                - l2 * counting_function(sigma_binf, t) as f64
                - l3
        })
        .fold(f64::INFINITY, f64::min)
}

/// Counting coefficients for recovering a potential from eigenvalues and
/// norming constants when it is known on `[b, pi]`, `b > d`:
/// `(A, 2b/pi - A, -A/2 - (m+1)/2)`.
pub fn two_spectra_coefficients(a: f64, b: f64, m: i32) -> (f64, f64, f64) {
    (a, 2.0 * b / PI - a, -a / 2.0 - (m as f64 + 1.0) / 2.0)
}

#[derive(Clone, Debug)]
pub struct LowerBound {
    /// `(y, |G(iy)| |y|^{-(l1/2+l3)} exp(-pi (l1+l2) sqrt(y/2)))`.
    pub values: Vec<(f64, f64)>,
    pub minimum: f64,
}

/// Evaluates the normalized ray quantity that a sequence obeying the counting
/// bound keeps away from zero.
pub fn counting_lower_bound(
    g: &(dyn Fn(C64) -> Result<Scaled> + Sync),
    (l1, l2, l3): (f64, f64, f64),
    ys: &[f64],
) -> Result<LowerBound> {
    let raw = sample_ray(g, ys, RaySide::Upper)?;
    let values: Vec<(f64, f64)> = raw
        .into_iter()
        .map(|(y, lg)| (y, (lg - (l1 / 2.0 + l3) * y.ln() - PI * (l1 + l2) * (y / 2.0).sqrt()).exp()))
        .collect();
    let minimum = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    Ok(LowerBound { values, minimum })
}

/// `G` for a whole spectrum with some entries removed and others added,
/// evaluated exactly through the Hadamard representation
/// `G(lambda) = Delta(lambda)/Delta(0) * prod_extra (1 - lambda/x) / prod_removed (1 - lambda/x)`.
#[derive(Clone, Debug)]
pub struct SequenceProduct<'a> {
    problem: &'a Problem,
    which: Which,
    removed: Vec<C64>,
    extra: Vec<C64>,
    delta0: Scaled,
    settings: Settings,
}

impl<'a> SequenceProduct<'a> {
    pub fn new(problem: &'a Problem, which: Which, removed: &[C64], extra: &[C64]) -> Result<Self> {
        if removed.iter().chain(extra).any(|z| z.norm() == 0.0) {
            return Err(Error::ZeroInSequence);
        }
        let settings = Settings::default();
        let delta0 = char_value(&settings, problem, which, C64::new(0.0, 0.0), 0)?[0];
        let scale = char_value(&settings, problem, which, C64::new(1.0, 0.0), 0)?[0].abs().max(1.0);
        if delta0.abs() < 1e-10 * scale {
            return Err(Error::VanishingAtOrigin);
        }
        Ok(SequenceProduct { problem, which, removed: removed.to_vec(), extra: extra.to_vec(), delta0, settings })
    }

    /// The full spectrum with its first `k` entries removed.
    pub fn skipping(problem: &'a Problem, which: Which, seq: &ZeroSequence, k: usize) -> Result<Self> {
        let removed: Vec<C64> = seq.lambdas().into_iter().take(k).collect();
        if removed.len() < k {
            return Err(Error::InvalidArgument(format!("sequence has fewer than {k} entries")));
        }
        Self::new(problem, which, &removed, &[])
    }

    fn correction(&self, z: C64) -> Scaled {
        let one = C64::new(1.0, 0.0);
        let mut c = Scaled::ONE;
        for x in &self.extra {
            c = c * (one - z / x);
        }
        for x in &self.removed {
            c = c / Scaled::from(one - z / x);
        }
        c
    }
}

impl Analytic for SequenceProduct<'_> {
    fn value(&self, z: C64) -> Result<Scaled> {
        let d = char_value(&self.settings, self.problem, self.which, z, 0)?[0];
        Ok(d / self.delta0 * self.correction(z))
    }

    fn with_derivative(&self, z: C64) -> Result<(Scaled, Scaled)> {
        let d = char_value(&self.settings, self.problem, self.which, z, 1)?;
        let c = self.correction(z);
        let v = d[0] / self.delta0 * c;
        let log_c: C64 = self.extra.iter().map(|x| (z - x).inv()).sum::<C64>()
            - self.removed.iter().map(|x| (z - x).inv()).sum::<C64>();
        let dv = d[1] / self.delta0 * c + v * log_c;
        Ok((v, dv))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::multiplicity_on_circles;

    #[test]
    fn classical_sine_product() {
        let zeros: Vec<C64> = (1..=10_000).map(|n| C64::new((n * n) as f64, 0.0)).collect();
        let m = ProductModel::from_values(&zeros, C64::new(1.0, 0.0), zeros.len()).unwrap();
        let v = truncated_product(&m, C64::new(0.25, 0.0));
        assert!((v.value.value().re - 2.0 / PI).abs() < 1e-4);
        assert!((v.value - v.half).abs() < (v.half.value().re - 2.0 / PI).abs());
        assert_eq!(truncated_product(&m, C64::new(0.0, 0.0)).value.value(), C64::new(1.0, 0.0));
        assert!(truncated_product(&m, C64::new(4.0, 0.0)).value.is_zero());
        let tail = shifted_square_tail(1.0, 0.0, 10_000);
        let comp = m.clone().with_tail(TailCompensation::Sum(C64::new(tail, 0.0)));
        let v = truncated_product(&comp, C64::new(0.25, 0.0));
        assert!((v.value.value().re - 2.0 / PI).abs() < 1e-9);
        assert!(ProductModel::from_values(&[C64::new(0.0, 0.0)], C64::new(1.0, 0.0), 1).is_err());
    }

    #[test]
    fn tail_sum_matches_direct_sum() {
        let direct: f64 = (50..2_000_000).map(|n| 1.0 / ((n as f64 + 0.5).powi(2) + 2.0)).sum();
        let rest = shifted_square_tail(0.5, 2.0, 2_000_000);
        assert!((shifted_square_tail(0.5, 2.0, 50) - direct - rest).abs() < 1e-12);
    }

    #[test]
    fn double_root_multiplicity() {
        let zeros = [C64::new(3.0, 1.0), C64::new(3.0, 1.0), C64::new(7.0, 0.0)];
        let m = ProductModel::from_values(&zeros, C64::new(2.0, 0.0), 3).unwrap();
        assert_eq!(multiplicity_on_circles(&m, C64::new(3.0, 1.0), 0.5).unwrap(), 2);
        let (_, d) = m.with_derivative(C64::new(3.0, 1.0)).unwrap();
        assert!(d.is_zero() || d.abs() < 1e-12);
    }

    #[test]
    fn growth_fit_recovers_exponents() {
        let ys = standard_ray();
        let cosine = |z: C64| -> Result<Scaled> {
            let k = z.sqrt() * PI;
            let e = Scaled::exp(C64::new(0.0, 1.0) * k);
            Ok((e + Scaled::exp(-C64::new(0.0, 1.0) * k)) * 0.5)
        };
        let fit = growth_fit(&sample_ray(&cosine, &ys, RaySide::Upper).unwrap()).unwrap();
        assert!((fit.c - PI).abs() < 0.02 * PI && fit.p.abs() < 0.05);
        let one = |_z: C64| -> Result<Scaled> { Ok(Scaled::ONE) };
        let fit = growth_fit(&sample_ray(&one, &ys, RaySide::Upper).unwrap()).unwrap();
        assert!(fit.c.abs() < 1e-8 && fit.p.abs() < 1e-8);
        assert!(growth_fit(&[(1.0, 0.0); 8]).is_err());
    }

    #[test]
    fn counting_margins() {
        let s = ZeroSequence::from_values(&shifted_squares(0.0, 2.0, 40));
        let e = ZeroSequence::from_values(&[]);
        assert_eq!(check_counting_bound(&s, &s, &e, (1.0, 0.0, 0.0), (0.0, 1000.0)), 0.0);
        assert_eq!(check_counting_bound(&s.skip(1), &s, &e, (1.0, 0.0, -1.0), (0.0, 1000.0)), 0.0);
        assert_eq!(two_spectra_coefficients(1.0, PI, 0), (1.0, 1.0, -1.0));
    }
}

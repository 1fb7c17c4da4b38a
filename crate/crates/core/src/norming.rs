//! Generalized ratios `kappa` and normalizing constants `alpha` at an
//! eigenvalue, and the derivative identity
//! `Delta^{(m+nu)}(lambda_n) = -(m+nu)! sum_j kappa_{n+j} alpha_{n+nu-j}`.
//!
//! For `B`: `kappa_{n+nu} = phi_nu(pi)`. For `B_inf`: `kappa_{n+nu} = phi_nu'(pi)`.
//! In both cases `alpha_{n+nu} = int_0^pi psi_nu psi_{m-1}` with the matching
//! `psi` chain. A problem with a Dirichlet condition at `pi` is its own
//! `B_inf`, so `B` is treated as `B_inf` there.

use crate::charfn::{derivatives_from_phi, Which};
use crate::contour::multiplicity_on_circles;
use crate::engine::{self, initial_data, ChainKind, Rider, Track, Weight};
use crate::error::{Error, Result};
use crate::ode::Settings;
use crate::problem::{BoundaryAtPi, Problem};
use crate::scaled::Scaled;
use crate::spectrum::{CharFunction, EigenRecord};
use num_complex::Complex64;
use std::f64::consts::PI;

type C64 = Complex64;

/// Residuals above this trigger a multiplicity re-probe.
pub const IDENTITY_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct NormingData {
    pub eigen: EigenRecord,
    pub which: Which,
    pub kappas: Vec<C64>,
    pub alphas: Vec<C64>,
    pub identity_residuals: Vec<f64>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn effective(problem: &Problem, which: Which) -> Which {
    match problem.big_h {
        BoundaryAtPi::Dirichlet => Which::BInf,
        BoundaryAtPi::Robin(_) => which,
    }
}

/// `|l - r| / (|l| + |r|)`, evaluated in log space.
pub fn relative_residual(l: Scaled, r: Scaled) -> f64 {
    let diff = l - r;
    if diff.is_zero() {
        return 0.0;
    }
    let (a, b) = (l.ln_abs(), r.ln_abs());
    let hi = a.max(b);
    let lo = a.min(b);
    let denom = if lo == f64::NEG_INFINITY { hi } else { hi + (lo - hi).exp().ln_1p() };
    (diff.ln_abs() - denom).exp()
}

pub fn compute_norming(problem: &Problem, eigen: &EigenRecord, which: Which) -> Result<NormingData> {
    compute_norming_with(&Settings::default(), problem, eigen, which)
}

pub fn compute_norming_with(
    settings: &Settings,
    problem: &Problem,
    eigen: &EigenRecord,
    which: Which,
) -> Result<NormingData> {
    let which = effective(problem, which);
    let data = norming_for(settings, problem, eigen, which)?;
    let worst = data.identity_residuals.iter().cloned().fold(0.0, f64::max);
    if worst <= IDENTITY_TOL {
        return Ok(data);
    }
    let f = CharFunction { problem, which, settings: settings.clone() };
    let radius = 1e-3 * (1.0 + eigen.lambda.norm());
    let m = multiplicity_on_circles(&f, eigen.lambda, radius)?;
    if m == eigen.multiplicity || m == 0 {
        return Err(Error::MultiplicityMismatch { multiplicity: eigen.multiplicity, residual: worst });
    }
    let retry = norming_for(settings, problem, &EigenRecord { multiplicity: m, ..*eigen }, which)?;
    let worst = retry.identity_residuals.iter().cloned().fold(0.0, f64::max);
    if worst > IDENTITY_TOL {
        return Err(Error::MultiplicityMismatch { multiplicity: m, residual: worst });
    }
    Ok(retry)
}

fn norming_for(settings: &Settings, problem: &Problem, eigen: &EigenRecord, which: Which) -> Result<NormingData> {
    let m = eigen.multiplicity;
    if m == 0 {
        return Err(Error::InvalidArgument("multiplicity must be positive".into()));
    }
    let lambda = eigen.lambda;
    let end = engine::phi_at_pi(settings, problem, lambda, 2 * m - 1)?;
    let kappas_s: Vec<Scaled> = (0..m)
        .map(|nu| match which {
            Which::B => end.y(nu),
            Which::BInf => end.dy(nu),
        })
        .collect();
    let alphas_s = alphas(settings, problem, lambda, m, which)?;
    let derivs = derivatives_from_phi(problem, which, &end);
    let identity_residuals = residuals(&derivs, &kappas_s, &alphas_s);
    Ok(NormingData {
        eigen: *eigen,
        which,
        kappas: kappas_s.iter().map(|s| s.value()).collect(),
        alphas: alphas_s.iter().map(|s| s.value()).collect(),
        identity_residuals,
    })
}

/// `alpha_nu = int_0^pi psi_nu psi_{m-1}`, accumulated while the `psi` chain
/// is integrated from `pi` down to `0`.
fn alphas(settings: &Settings, problem: &Problem, lambda: C64, m: usize, which: Which) -> Result<Vec<Scaled>> {
    let kind = match which {
        Which::B => ChainKind::Psi,
        Which::BInf => ChainKind::PsiInf,
    };
    let (x0, init) = initial_data(problem, kind, m - 1);
    let track = Track { problem, init };
    let riders: Vec<Rider> =
        (0..m).map(|nu| Rider { a: (0, nu), b: (0, m - 1), weight: Weight::One }).collect();
    let snaps = engine::run(settings, lambda, std::slice::from_ref(&track), &riders, x0, 0.0, &[])?;
    let last = snaps.last().expect("run returns the end point");
    // integrated from pi to 0, hence the sign
    Ok(last.riders.iter().map(|r| -*r).collect())
}

fn residuals(derivs: &[Scaled], kappas: &[Scaled], alphas: &[Scaled]) -> Vec<f64> {
    let m = kappas.len();
    (0..m)
        .map(|nu| {
            let lhs = derivs[m + nu];
            let sum = (0..=nu).fold(Scaled::ZERO, |acc, j| acc + kappas[j] * alphas[nu - j]);
            let rhs = sum * -factorial(m + nu);
            relative_residual(lhs, rhs)
        })
        .collect()
}

/// Re-evaluates the derivative identity for `norming`, with `Delta`
/// derivatives from a fresh `phi` chain solve.
pub fn check_derivative_identity(problem: &Problem, norming: &NormingData) -> Result<f64> {
    let m = norming.kappas.len();
    if m == 0 || norming.alphas.len() != m {
        return Err(Error::InvalidArgument("norming data must hold one kappa and alpha per multiplicity".into()));
    }
    let end = engine::phi_at_pi(&Settings::default(), problem, norming.eigen.lambda, 2 * m - 1)?;
    let derivs = derivatives_from_phi(problem, norming.which, &end);
    let k: Vec<Scaled> = norming.kappas.iter().map(|&z| Scaled::from(z)).collect();
    let a: Vec<Scaled> = norming.alphas.iter().map(|&z| Scaled::from(z)).collect();
    Ok(residuals(&derivs, &k, &a).into_iter().fold(0.0, f64::max))
}

/// `Delta'(n^2) = -(pi/2)(-1)^n` for `q = 0`, `h = H = 0` (and `-pi` at `n = 0`).
pub fn neumann_delta_prime(n: usize) -> f64 {
    if n == 0 {
        -PI
    } else {
        -(PI / 2.0) * if n % 2 == 0 { 1.0 } else { -1.0 }
    }
}

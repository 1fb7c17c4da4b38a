use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;
use sturmdisc::charfn::{f_function, EvalPoint, Which};
use sturmdisc::entire::geometric_ray;
use sturmdisc::error::Error;
use sturmdisc::lab::*;
use sturmdisc::ode::Settings;
use sturmdisc::problem::{differentiate, Side};
use sturmdisc::spectrum::find_eigenvalues;
use sturmdisc::Problem;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn jumped(q: &str, beta: f64, gamma: f64, d: f64) -> Problem {
    Problem::simple(q).unwrap().with_jump(beta, c(gamma), d).unwrap()
}

fn ray_fit(a: &Problem, b: &Problem, b_point: f64, m: i32) -> RayDecayFit {
    let e = PairExperiment::new(a.clone(), b.clone(), b_point, m).unwrap();
    ray_decay_probe(&e, &RayDecayOptions::default()).unwrap()
}

#[test]
fn step_pair_matches_closed_form() {
    // q_B - q_A = s on [0, b) with q_A = 0: F = s int_0^b cos(kx) cos(k'x) dx.
    let (s, b) = (1.7, 2.0);
    let a = Problem::simple("0").unwrap();
    let bp = splice(&a, b, -1, "1.7").unwrap();
    let e = PairExperiment::new(a, bp, b, -1).unwrap();
    let opts = RayDecayOptions { ys: geometric_ray(2.0, 4.0, 4), ..RayDecayOptions::default() };
    let fit = ray_decay_probe(&e, &opts).unwrap();
    for sample in &fit.samples {
        let lambda = C64::new(0.0, sample.y);
        let (k, kp) = (lambda.sqrt(), (lambda - s).sqrt());
        let exact = s / 2.0 * (((k - kp) * b).sin() / (k - kp) + ((k + kp) * b).sin() / (k + kp));
        assert!((sample.ln_abs - exact.norm().ln()).abs() < 1e-8, "y = {}", sample.y);
    }
}

#[test]
fn integrable_difference_is_little_o_of_one() {
    let a = jumped("0", 1.5, 0.3, 1.0);
    let b = splice(&a, 2.0, -1, "1").unwrap();
    let fit = ray_fit(&a, &b, 2.0, -1);
    let slope = fit.slope.unwrap();
    assert!(slope <= 0.15 && fit.tail_decreasing && fit.pass, "{slope}");
}

#[test]
fn continuous_splice_beats_half_power() {
    let a = jumped("cos(x)", 1.5, 0.3, 1.0);
    let b = splice(&a, 2.0, 0, "1 + x").unwrap();
    let fit = ray_fit(&a, &b, 2.0, 0);
    assert!(fit.pass && fit.slope.unwrap() <= -0.35, "{:?}", fit.slope);
}

#[test]
fn quadratic_splice_with_different_h() {
    let a = jumped("0", 2.0, 0.0, 1.0);
    let b = splice(&a, 2.0, 1, "1").unwrap().with_h(c(0.5));
    let fit = ray_fit(&a, &b, 2.0, 1);
    assert!(fit.pass && fit.slope.unwrap() <= -0.85, "{:?}", fit.slope);
}

#[test]
fn smoother_splices_decay_faster() {
    let a = jumped("x", 1.5, -0.4, 0.8);
    let mut previous = f64::INFINITY;
    for m in 0..=2 {
        let b = splice(&a, 2.2, m, "cos(x)").unwrap();
        let fit = ray_fit(&a, &b, 2.2, m);
        let slope = fit.slope.unwrap();
        assert!(fit.pass, "m = {m}: {slope}");
        assert!(slope < previous - 0.3, "m = {m}: {slope} vs {previous}");
        previous = slope;
    }
}

#[test]
fn identical_pair_is_identically_zero() {
    let a = jumped("cos(x)", 1.5, 0.3, 1.0);
    let fit = ray_fit(&a, &a, 2.0, 0);
    assert!(fit.identically_zero && fit.pass && fit.slope.is_none());
}

#[test]
fn ray_probe_needs_b_past_the_jump() {
    let a = jumped("0", 1.5, 0.3, 2.0);
    let b = splice(&a, 1.5, 0, "1").unwrap();
    let e = PairExperiment::new(a, b, 1.5, 0).unwrap();
    assert!(matches!(ray_decay_probe(&e, &RayDecayOptions::default()), Err(Error::Precondition(_))));
}

#[test]
fn ray_probe_rejects_unmatched_derivatives() {
    let a = jumped("0", 1.5, 0.3, 1.0);
    let b = splice(&a, 2.0, -1, "1").unwrap();
    let e = PairExperiment::new(a, b, 2.0, 0).unwrap();
    assert!(matches!(ray_decay_probe(&e, &RayDecayOptions::default()), Err(Error::Precondition(_))));
}

fn brackets(b_point: f64) -> f64 {
    let a = jumped("cos(x)", 1.5, 0.3, 1.0);
    let b = splice(&a, b_point, 0, "1").unwrap().with_jump(2.0, c(-0.2), 1.0).unwrap();
    let e = PairExperiment::new(a, b, b_point, 0).unwrap();
    bracket_consistency(&e, &bracket_grid(), &Settings::tight()).unwrap().worst
}

#[test]
fn brackets_formulas_agree_past_the_jump() {
    assert!(brackets(2.0) < 1e-8);
}

#[test]
fn brackets_formulas_agree_at_the_jump() {
    assert!(brackets(1.0) < 1e-8);
}

#[test]
fn brackets_formulas_agree_before_the_jump() {
    assert!(brackets(0.6) < 1e-8);
}

#[test]
fn bracket_before_the_jump_matches_pi() {
    let a = jumped("cos(x)", 1.5, 0.3, 1.0);
    let b = splice(&a, 0.6, 0, "1").unwrap().with_jump(2.0, c(-0.2), 1.0).unwrap();
    let lambda = C64::new(3.0, 1.0);
    let full = f_function(&a, &b, lambda, EvalPoint::Pi).unwrap().f.value();
    let at_b = f_function(&a, &b, lambda, EvalPoint::B(0.6)).unwrap().f.value();
    assert!((full - at_b).norm() < 1e-8 * full.norm());
    let at_d = f_function(&a, &b, lambda, EvalPoint::DJump).unwrap().f.value();
    assert!((full - at_d).norm() < 1e-8 * full.norm());
}

#[test]
fn brackets_identical_pair_has_no_gap() {
    let a = jumped("cos(x)", 1.5, 0.3, 1.0);
    let e = PairExperiment::new(a.clone(), a, 0.6, 0).unwrap();
    assert_eq!(bracket_consistency(&e, &bracket_grid(), &Settings::default()).unwrap().worst, 0.0);
}

#[test]
fn brackets_needs_a_shared_jump_point() {
    let a = jumped("0", 1.5, 0.3, 1.0);
    let b = jumped("0", 1.5, 0.3, 1.2);
    let e = PairExperiment::new(a, b, 2.0, 0).unwrap();
    assert!(matches!(bracket_consistency(&e, &bracket_grid(), &Settings::default()), Err(Error::Precondition(_))));
}

#[test]
fn experiment_rejects_disagreement_on_the_tail() {
    let a = Problem::simple("0").unwrap();
    let b = Problem::simple("0.001*x").unwrap();
    assert!(matches!(PairExperiment::new(a, b, 3.0, 0), Err(Error::Precondition(_))));
}

fn desk_pair() -> (Problem, Problem) {
    let a = jumped("1", 2.0, 0.0, PI / 2.0);
    let b = splice(&a, 0.75 * PI, 0, "1").unwrap();
    (a, b)
}

fn desk_experiment(a: &Problem, b: &Problem) -> PairExperiment {
    let sb = find_eigenvalues(a, Which::B, 400.0).unwrap().lambdas();
    let si = find_eigenvalues(a, Which::BInf, 400.0).unwrap().lambdas();
    PairExperiment::new(a.clone(), b.clone(), 0.75 * PI, 0)
        .unwrap()
        .with_selections(Some(Selection::without(&sb[..1])), Some(Selection::without(&si[..1])))
        .unwrap()
}

#[test]
fn two_spectra_ratio_decreases() {
    let (a, b) = desk_pair();
    let e = desk_experiment(&a, &b);
    let r = ratio_probe(&e, RatioKind::F, &RatioOptions::default()).unwrap();
    assert_eq!(r.coefficients, (1.0, 0.5, -1.0));
    assert!(r.counting_margin >= 0.0);
    assert!(r.tail_decreasing && !r.identically_zero);
    assert!(r.slope.unwrap() < 0.0);
}

#[test]
fn value_ratios_decrease() {
    let (a, b) = desk_pair();
    let e = desk_experiment(&a, &b);
    let opts = RatioOptions { a_coeff: 0.5, epsilon: 0.1, ..RatioOptions::default() };
    for kind in [RatioKind::F1, RatioKind::FOverPhi] {
        let r = ratio_probe(&e, kind, &opts).unwrap();
        assert!((r.coefficients.1 - 0.25).abs() < 1e-15);
        assert!(r.tail_decreasing && r.slope.unwrap() < 0.0, "{kind:?}");
    }
}

#[test]
fn identical_problems_give_a_zero_ratio() {
    let (a, _) = desk_pair();
    let e = desk_experiment(&a, &a);
    for kind in [RatioKind::F, RatioKind::F1, RatioKind::FOverPhi] {
        let r = ratio_probe(&e, kind, &RatioOptions { a_coeff: 0.5, ..RatioOptions::default() }).unwrap();
        assert!(r.identically_zero && r.tail_decreasing, "{kind:?}");
    }
}

#[test]
fn one_spectrum_with_entries_left_out() {
    // Jump before pi/2, agreement on [pi/2, pi]: all eigenvalues of B except
    // [(m+2)/2] of them.
    for m in 0..=2 {
        let a = jumped("1", 2.0, 0.0, 1.0);
        let sb = find_eigenvalues(&a, Which::B, 400.0).unwrap().lambdas();
        let k = ((m + 2) / 2) as usize;
        let b = splice(&a, PI / 2.0, m, "1").unwrap();
        let e = PairExperiment::new(a, b, PI / 2.0, m)
            .unwrap()
            .with_selections(Some(Selection::without(&sb[..k])), None)
            .unwrap();
        let r = ratio_probe(&e, RatioKind::F, &RatioOptions::default()).unwrap();
        assert!(r.counting_margin >= 0.0, "m = {m}");
        assert!(r.tail_decreasing, "m = {m}");
    }
}

#[test]
fn too_few_eigenvalues_violate_the_counting_inequality() {
    let a = jumped("1", 2.0, 0.0, 1.0);
    let sb = find_eigenvalues(&a, Which::B, 400.0).unwrap().lambdas();
    let b = splice(&a, PI / 2.0, 0, "1").unwrap();
    let e = PairExperiment::new(a, b, PI / 2.0, 0).unwrap().with_selections(Some(Selection::without(&sb[..2])), None).unwrap();
    assert!(matches!(ratio_probe(&e, RatioKind::F, &RatioOptions::default()), Err(Error::Precondition(_))));
}

#[test]
fn selections_are_validated() {
    let (a, b) = desk_pair();
    let sb = find_eigenvalues(&a, Which::B, 50.0).unwrap().lambdas();
    let base = PairExperiment::new(a, b, 0.75 * PI, 0).unwrap();
    let repeat = Selection { removed: Vec::new(), repeated: vec![(sb[0], 2)] };
    assert!(matches!(base.clone().with_selections(Some(repeat), None), Err(Error::Precondition(_))));
    let zero_repeat = Selection { removed: Vec::new(), repeated: vec![(sb[0], 0)] };
    assert!(matches!(base.clone().with_selections(Some(zero_repeat), None), Err(Error::Precondition(_))));
    let stray = Selection::without(&[sb[0] + 0.5]);
    assert!(matches!(base.clone().with_selections(Some(stray), None), Err(Error::Precondition(_))));
    let ok = Selection { removed: vec![sb[1]], repeated: vec![(sb[0], 1)] };
    assert!(base.with_selections(Some(ok), None).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn splice_matches_derivatives_at_b(b in 0.3..3.0f64, m in -1i32..=3, w in -3.0..3.0f64) {
        let a = Problem::simple("sin(x) + x*x").unwrap();
        let bp = splice(&a, b, m, &format!("{w} + cos(x)")).unwrap();
        prop_assert!(PairExperiment::new(a.clone(), bp.clone(), b, m).is_ok());
        for j in 0..=m {
            let qa = differentiate(&a.q, j as usize).eval(b, Side::Left).unwrap();
            let qb = differentiate(&bp.q, j as usize).eval(b, Side::Left).unwrap();
            prop_assert!((qa - qb).norm() < 1e-9 * (1.0 + qa.norm()));
        }
    }

    // Brackets cancel like exp(2 |Im k| (pi - b)), so k stays in the strip the
    // default grid uses.
    #[test]
    fn brackets_hold_for_any_agreement_point(b in 0.2..3.1f64, beta in 0.5..2.5f64, kr in 0.3..8.0f64, ki in -1.0..1.0f64) {
        let a = jumped("cos(x)", 1.3, 0.2, 1.1);
        let bp = splice(&a, b, 0, "2 - x").unwrap().with_jump(beta, c(0.1), 1.1).unwrap();
        let e = PairExperiment::new(a, bp, b, 0).unwrap();
        let k = C64::new(kr, ki);
        let r = bracket_consistency(&e, &[k * k], &Settings::tight()).unwrap();
        prop_assert!(r.worst < 1e-8, "{}", r.worst);
    }
}

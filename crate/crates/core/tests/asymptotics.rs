use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;
use sturmdisc::asymptotics::*;
use sturmdisc::engine::{fundamental_pair, solve_chain, ChainKind};
use sturmdisc::entire::geometric_ray;
use sturmdisc::funcs::Func;
use sturmdisc::quad::integrate;
use sturmdisc::{PotentialExpr, Problem};

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn leading_term_is_exact_without_potential() {
    let p = Problem::simple("0").unwrap().with_jump(2.0, C64::new(0.0, 0.0), 1.0).unwrap();
    for lambda in [C64::new(3.7, 0.0), C64::new(-2.0, 5.0), C64::new(40.0, -3.0)] {
        let chain = solve_chain(&p, lambda, ChainKind::Phi, 0, &[0.5, 2.0, 3.0]).unwrap();
        for x in [0.5, 2.0, 3.0] {
            let state = chain.states.iter().find(|s| s.x == x).unwrap();
            let (v, dv) = leading_phi(&p, x, lambda);
            let scale = 1.0 + v.norm() + dv.norm();
            assert!((state.y(0).value() - v).norm() < 1e-8 * scale, "{lambda} {x}");
            assert!((state.dy(0).value() - dv).norm() < 1e-8 * scale, "{lambda} {x}");
        }
    }
}

#[test]
fn leading_term_error_is_order_one_over_k() {
    let p = Problem::simple("cos(x)").unwrap().with_jump(1.5, C64::new(0.0, 0.0), 0.1).unwrap();
    for x in [0.05, 0.25] {
        let mut points = Vec::new();
        for y in geometric_ray(2.0, 6.0, 2) {
            let lambda = C64::new(0.0, y);
            let k = lambda.sqrt();
            let chain = solve_chain(&p, lambda, ChainKind::Phi, 0, &[x]).unwrap();
            let state = chain.states.iter().find(|s| s.x == x).unwrap();
            let (v, _) = leading_phi(&p, x, lambda);
            let bound = (state.y(0).value() - v).norm() * k.norm() * (-k.im.abs() * x).exp();
            assert!(bound.is_finite() && bound < 10.0, "{x} {y} {bound}");
            points.push((y.ln(), bound.ln()));
        }
        assert!(slope(&points) < 0.05, "{x} {points:?}");
    }
}

#[test]
fn coefficients_for_linear_potential() {
    let t = build_expansion(&PotentialExpr::parse("x").unwrap(), 1, 1.0).unwrap();
    for x in [0.0, 0.3, 1.0] {
        // b_0 = sigma / 2 = x^2 / 4
        assert!((t.b[0].eval(x) - x * x / 4.0).norm() < 1e-15);
        assert!((t.f(1, 1).eval(x) + x * x / 2.0).norm() < 1e-15);
    }
}

#[test]
fn first_term_closed_form() {
    let q = PotentialExpr::parse("1").unwrap();
    for (lambda, x) in [(C64::new(4.0, 0.0), 1.0), (C64::new(-3.0, 2.0), 2.5), (C64::new(150.0, 10.0), 0.7)] {
        let k = lambda.sqrt();
        let closed = (k * x).sin() / (2.0 * k.powi(3)) - x * (k * x).cos() / (2.0 * lambda);
        let s = s_series(&q, x, lambda, 1).unwrap();
        assert!((s.terms_s[1] - closed).norm() < 1e-8 * (1.0 + closed.norm()), "{lambda}");
        // direct quadrature of the defining integral
        let direct = integrate(&|t: f64| (k * (x - t)).sin() * (k * t).sin() / lambda, 0.0, x, 1e-15, 1e-13).unwrap();
        assert!((direct - closed).norm() < 1e-10 * (1.0 + closed.norm()));
    }
    let s = s_series(&q, 1.0, C64::new(4.0, 0.0), 1).unwrap();
    let expected = 2f64.sin() / 2.0 + 2f64.sin() / 16.0 - 2f64.cos() / 8.0;
    assert!((s.sum_s.re - expected).abs() < 1e-12, "{}", s.sum_s);
    assert!((s.sum_s.re - 0.563499).abs() < 1e-6);
    assert!((s.terms_s[0].re - 2f64.sin() / 2.0).abs() < 1e-15);
}

#[test]
fn series_terms_shrink_fivefold() {
    let p = Problem::simple("1").unwrap();
    let (x, lambda) = (1.0, C64::new(4.0, 0.0));
    let (_, y2) = fundamental_pair(&p, 0.0, x, lambda).unwrap();
    let exact = y2.y(0).value();
    let s = s_series(&p.q, x, lambda, 6).unwrap();
    let mut partial = C64::new(0.0, 0.0);
    let mut last = f64::INFINITY;
    for term in &s.terms_s {
        partial += term;
        let residual = (partial - exact).norm();
        if residual < 1e-9 {
            break;
        }
        assert!(last / residual >= 5.0, "{last} -> {residual}");
        last = residual;
    }
}

#[test]
fn series_converges_to_integrator() {
    // larger int |q|: terms grow before the factorial takes over
    for (src, x, lambda) in [("1", 2.5, C64::new(4.0, 0.0)), ("cos(x) + x", 2.0, C64::new(4.0, 0.0)), ("x", 3.0, C64::new(-5.0, 8.0))] {
        let p = Problem::simple(src).unwrap();
        let (_, y2) = fundamental_pair(&p, 0.0, x, lambda).unwrap();
        let s = s_series(&p.q, x, lambda, 25).unwrap();
        let scale = 1.0 + y2.y(0).abs();
        assert!((s.sum_s - y2.y(0).value()).norm() < 1e-8 * scale, "{src}");
        assert!((s.sum_c - y2.dy(0).value()).norm() < 1e-8 * (1.0 + y2.dy(0).abs()), "{src}");
    }
}

fn expansion_slope(src: &str, m: usize, x: f64) -> f64 {
    let p = Problem::simple(src).unwrap();
    let table = build_expansion(&p.q, m, x).unwrap();
    let points: Vec<(f64, f64)> = geometric_ray(2.0, 4.0, 3)
        .into_iter()
        .map(|y| {
            let lambda = C64::new(0.0, y);
            let k = lambda.sqrt();
            let (_, y2) = fundamental_pair(&p, 0.0, x, lambda).unwrap();
            let (e, _) = expansion_y2(&table, x, lambda).unwrap();
            let r = (e - y2.y(0).value()).norm() * (-k.im.abs() * x).exp();
            (k.norm().ln(), r.ln())
        })
        .collect();
    slope(&points)
}

#[test]
fn expansion_matches_integrator_to_claimed_order() {
    for m in 0..=1usize {
        let s = expansion_slope("1", m, 1.0);
        assert!(s <= -((m + 3) as f64) + 0.3, "q=1 m={m}: {s}");
    }
    let s = expansion_slope("cos(x)", 1, 1.0);
    assert!(s <= -4.0 + 0.3, "cos m=1: {s}");
}

#[test]
fn non_polynomial_table_uses_samples() {
    let t = build_expansion(&PotentialExpr::parse("cos(x)").unwrap(), 1, 2.0).unwrap();
    assert!(!t.symbolic);
    assert!(matches!(t.f(1, 1), Func::Cheb { .. }));
    for x in [0.0, 0.9, 2.0] {
        assert!((t.f(1, 1).eval(x).re + x.sin()).abs() < 1e-13);
        // f_{1,2} = q(x) + q(0)
        assert!((t.f(1, 2).eval(x).re - x.cos() - 1.0).abs() < 1e-12);
    }
}

fn splice(base: &str, m: i32, x0: f64) -> Problem {
    let bump = format!("{base} + (x - {x0})^{}", m + 1);
    let q = PotentialExpr::piecewise(&[(0.0, x0, &bump), (x0, PI, base)]).unwrap();
    Problem::simple(base).unwrap().with_q(q)
}

#[test]
fn identical_pair_is_identically_zero() {
    let p = Problem::simple("cos(x)").unwrap();
    let fit = decay_order_fit(&p, &p, 0.0, 1.0, 3, Combination::Y2Y2, &DecayOptions::default()).unwrap();
    assert!(fit.identically_zero && fit.pass);
}

#[test]
fn quadratic_splice_decays_fast_enough() {
    let a = Problem::simple("0").unwrap();
    let q = PotentialExpr::piecewise(&[(0.0, 1.0, "(x-1)^2"), (1.0, PI, "0")]).unwrap();
    let b = Problem::simple("0").unwrap().with_q(q);
    let fit = decay_order_fit(&a, &b, 0.0, 1.0, 1, Combination::Y2Y2, &DecayOptions::default()).unwrap();
    assert!(fit.slope.unwrap() <= -3.7 && fit.pass, "{fit:?}");
}

#[test]
fn splice_pairs_meet_claimed_orders() {
    let a = Problem::simple("cos(x)").unwrap();
    for m in 0..=2 {
        let b = splice("cos(x)", m, 1.2);
        for c in Combination::ALL {
            let fit = decay_order_fit(&a, &b, 0.0, 1.2, m, c, &DecayOptions::default()).unwrap();
            assert!(fit.pass, "m={m} {c:?} {fit:?}");
        }
        let fit = decay_order_fit(&a, &b, 0.0, 1.2, m, Combination::Y2Y2, &DecayOptions::default()).unwrap();
        assert!(fit.slope.unwrap() <= -(m as f64 + 2.7));
    }
}

#[test]
fn step_potential_decays_at_l1_rate() {
    let a = Problem::simple("0").unwrap();
    let q = PotentialExpr::piecewise(&[(0.0, 1.0, "1"), (1.0, PI, "0")]).unwrap();
    let b = Problem::simple("0").unwrap().with_q(q);
    let fit = decay_order_fit(&a, &b, 0.0, 1.0, -1, Combination::Y2Y2, &DecayOptions::default()).unwrap();
    assert!(fit.slope.unwrap() <= -1.7, "{fit:?}");
}

#[test]
fn mismatched_derivatives_are_rejected() {
    let a = Problem::simple("0").unwrap();
    let b = splice("0", 0, 1.0);
    assert!(decay_order_fit(&a, &b, 0.0, 1.0, 1, Combination::Y1Y1, &DecayOptions::default()).is_err());
}

#[test]
fn jumps_enter_through_the_bracket_change() {
    // equal potentials, different jumps: the combination is the jump term alone
    let a = Problem::simple("1").unwrap().with_jump(2.0, C64::new(0.0, 0.0), 0.5).unwrap();
    let b = Problem::simple("1").unwrap().with_jump(1.5, C64::new(0.3, 0.0), 0.5).unwrap();
    let opts = DecayOptions { ys: vec![50.0, 500.0, 5000.0], ..DecayOptions::default() };
    // just past d, so the direct bracket does not cancel
    let x0 = 0.55;
    let fit = decay_order_fit(&a, &b, 0.0, x0, 0, Combination::Y1Y2, &opts).unwrap();
    for s in &fit.samples {
        let lambda = C64::new(0.0, s.y);
        let (ya1, _) = fundamental_pair(&a, 0.0, x0, lambda).unwrap();
        let (_, yb2) = fundamental_pair(&b, 0.0, x0, lambda).unwrap();
        let direct = ya1.bracket(0, &yb2, 0);
        assert!((direct.ln_abs() - s.ln_abs).abs() < 1e-6, "y={} {} {}", s.y, direct.ln_abs(), s.ln_abs);
    }
}

proptest! {
    #[test]
    fn product_identity(x in 0.0..PI, t in 0.0..PI, re in -50.0..50.0f64, im in -20.0..20.0f64, j in 0usize..=6) {
        let k = C64::new(re, im).sqrt();
        prop_assume!(k.norm() > 0.5);
        let lhs = (k * (x - t)).sin() / k * nu(j, t, k);
        let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
        let rhs = nu(j + 1, x, k) * sign + nu(j + 1, x - 2.0 * t, k);
        let scale = lhs.norm() + nu(j + 1, x, k).norm() + nu(j + 1, x - 2.0 * t, k).norm();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * scale);
    }

    #[test]
    fn integration_by_parts_identity(x in 0.1..PI, re in -50.0..50.0f64, im in -10.0..10.0f64, j in 0usize..=6) {
        let k = C64::new(re, im).sqrt();
        prop_assume!(k.norm() > 0.5);
        let f = |t: f64| t.cos() + t * t;
        let df = |t: f64| -t.sin() + 2.0 * t;
        let lhs = integrate(&|t: f64| nu(j, x - 2.0 * t, k) * f(t), 0.0, x, 1e-16, 1e-14).unwrap();
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let tail = integrate(&|t: f64| nu(j + 1, x - 2.0 * t, k) * df(t), 0.0, x, 1e-16, 1e-14).unwrap();
        let rhs = nu(j + 1, x, k) * (f(x) - sign * f(0.0)) - tail * sign;
        let scale = lhs.norm() + rhs.norm() + tail.norm() + nu(j + 1, x, k).norm() * (1.0 + f(x));
        prop_assert!((lhs - rhs).norm() <= 1e-12 * scale);
    }
}

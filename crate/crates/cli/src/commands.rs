//! One function per subcommand. Each fills an [`Output`] as it goes, so a
//! failure part way through still leaves the finished rows in the report.

use crate::config::{check, CliError, ComplexSpec, RaySpec, RunConfig};
use crate::report::{complex, scaled, Cell, Output, Table};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::f64::consts::PI;
use sturmdisc::asymptotics::{decay_order_fit, Combination, DecayOptions};
use sturmdisc::charfn::{char_delta, char_value, f_function, f_integral, weyl_m, EvalPoint, Which, WeylValue};
use sturmdisc::entire::{char_growth, fit_constant, standard_ray, truncated_product, ProductModel};
use sturmdisc::lab::{
    bracket_consistency, bracket_grid, ray_decay_probe, ratio_probe, PairExperiment, RatioKind, RatioOptions,
    RayDecayOptions, Selection,
};
use sturmdisc::norming::compute_norming;
use sturmdisc::ode::Settings;
use sturmdisc::spectrum::{find_eigenvalues, find_eigenvalues_with, SearchOptions, TIE_BREAK};
use sturmdisc::Problem;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Norming,
    Charfn,
    Product,
    Growth,
    Asympt,
    Uniq,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Norming => "norming",
            Command::Charfn => "charfn",
            Command::Product => "product",
            Command::Growth => "growth",
            Command::Asympt => "asympt",
            Command::Uniq => "uniq",
        }
    }
}

/// Outcome of one command run.
pub struct Run {
    /// Parameters with defaults filled in, or the raw parameters when they
    /// failed to parse.
    pub params: Value,
    pub output: Option<Output>,
    pub error: Option<CliError>,
}

type Body<P> = fn(&RunConfig, &P, &mut Output) -> Result<(), CliError>;

fn drive<P: DeserializeOwned + Serialize>(cfg: &RunConfig, header: &[&'static str], body: Body<P>) -> Run {
    let params: P = match cfg.params() {
        Ok(p) => p,
        Err(e) => return Run { params: cfg.params.clone(), output: None, error: Some(e) },
    };
    let resolved = serde_json::to_value(&params).expect("parameters serialize");
    let mut out = Output::new(Table::new(header));
    let error = body(cfg, &params, &mut out).err();
    Run { params: resolved, output: Some(out), error }
}

pub fn run(cfg: &RunConfig, command: Command) -> Run {
    if let Some(named) = &cfg.command {
        if named != command.name() {
            return Run {
                params: cfg.params.clone(),
                output: None,
                error: Some(CliError::Validation(format!(
                    "command: config is for `{named}` but `{}` was invoked",
                    command.name()
                ))),
            };
        }
    }
    match command {
        Command::Spectrum => drive(cfg, &["index", "re", "im", "multiplicity", "residual"], spectrum),
        Command::Norming => drive(
            cfg,
            &["index", "lambda_re", "lambda_im", "nu", "kappa_re", "kappa_im", "alpha_re", "alpha_im", "identity_residual"],
            norming,
        ),
        Command::Charfn => drive(cfg, &[], charfn),
        Command::Product => drive(
            cfg,
            &["lambda_re", "lambda_im", "delta_re", "delta_im", "product_re", "product_im", "half_re", "half_im", "rel_error"],
            product,
        ),
        Command::Growth => drive(cfg, &["y", "log_abs_f", "model_prediction"], growth),
        Command::Asympt => drive(cfg, &["combination", "y", "ln_abs", "ln_normalized", "below_floor"], asympt),
        Command::Uniq => drive(cfg, &[], uniq),
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum WhichSpec {
    #[default]
    B,
    BInf,
}

impl WhichSpec {
    fn which(self) -> Which {
        match self {
            WhichSpec::B => Which::B,
            WhichSpec::BInf => Which::BInf,
        }
    }
}

const MAX_BOUND: f64 = 1e6;

fn check_bound(bound: f64) -> Result<(), CliError> {
    check(bound.is_finite() && bound > 0.0 && bound <= MAX_BOUND, "params.bound: must lie in (0, 1e6]")
}

fn lambdas(list: &[ComplexSpec]) -> Result<Vec<Complex64>, CliError> {
    check(!list.is_empty(), "params.lambdas: at least one value required")?;
    let v: Vec<Complex64> = list.iter().map(|c| c.value()).collect();
    check(v.iter().all(|z| z.re.is_finite() && z.im.is_finite()), "params.lambdas: values must be finite")?;
    Ok(v)
}

fn c(z: Complex64) -> [Cell; 2] {
    [Cell::Num(z.re), Cell::Num(z.im)]
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumParams {
    pub problem: String,
    #[serde(default)]
    pub which: WhichSpec,
    pub bound: f64,
    /// Half-height of the search strip around the real axis.
    #[serde(default)]
    pub strip_half_height: Option<f64>,
}

fn spectrum(cfg: &RunConfig, p: &SpectrumParams, out: &mut Output) -> Result<(), CliError> {
    check_bound(p.bound)?;
    let problem = cfg.problem(&p.problem)?;
    let mut opts = SearchOptions::default();
    if let Some(h) = p.strip_half_height {
        check(h.is_finite() && h > 0.0, "params.strip_half_height: must be positive")?;
        opts.c_im = h;
    }
    let seq = find_eigenvalues_with(&problem, p.which.which(), p.bound, &opts)?;
    let mut list = Vec::new();
    for (i, r) in seq.distinct().iter().enumerate() {
        list.push(json!({ "re": r.lambda.re, "im": r.lambda.im, "multiplicity": r.multiplicity, "residual": r.refined_residual }));
        let [re, im] = c(r.lambda);
        out.table.push(vec![Cell::Int(i as i64), re, im, Cell::Int(r.multiplicity as i64), Cell::Num(r.refined_residual)]);
    }
    out.result = json!({
        "eigenvalues": list,
        "count_with_multiplicity": seq.len(),
        "tie_broken": seq.tie_broken,
        "tie_break": TIE_BREAK,
    });
    Ok(())
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NormingParams {
    pub problem: String,
    #[serde(default)]
    pub which: WhichSpec,
    pub bound: f64,
}

fn norming(cfg: &RunConfig, p: &NormingParams, out: &mut Output) -> Result<(), CliError> {
    check_bound(p.bound)?;
    let problem = cfg.problem(&p.problem)?;
    let which = p.which.which();
    let seq = find_eigenvalues(&problem, which, p.bound)?;
    let distinct = seq.distinct();
    let computed: Vec<_> = distinct.par_iter().map(|e| compute_norming(&problem, e, which)).collect();
    let mut list = Vec::new();
    let mut failure = None;
    for (i, r) in computed.into_iter().enumerate() {
        let d = match r {
            Ok(d) => d,
            Err(e) => {
                failure = Some(e);
                break;
            }
        };
        list.push(json!({
            "lambda": complex(d.eigen.lambda),
            "multiplicity": d.eigen.multiplicity,
            "kappas": d.kappas.iter().map(|z| complex(*z)).collect::<Vec<_>>(),
            "alphas": d.alphas.iter().map(|z| complex(*z)).collect::<Vec<_>>(),
            "identity_residuals": d.identity_residuals,
        }));
        for nu in 0..d.kappas.len() {
            let [lr, li] = c(d.eigen.lambda);
            let [kr, ki] = c(d.kappas[nu]);
            let [ar, ai] = c(d.alphas[nu]);
            let res = d.identity_residuals.get(nu).copied().unwrap_or(f64::NAN);
            out.table.push(vec![Cell::Int(i as i64), lr, li, Cell::Int(nu as i64), kr, ki, ar, ai, Cell::Num(res)]);
        }
    }
    out.result = json!({ "constants": list });
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum AtName {
    Pi,
    D,
}

/// `"pi"`, `"d"` (meaning `d+0`) or a point of `(0, pi]`.
#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq)]
#[serde(untagged)]
pub enum AtSpec {
    Named(AtName),
    Point(f64),
}

impl Default for AtSpec {
    fn default() -> Self {
        AtSpec::Named(AtName::Pi)
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CharfnParams {
    pub problem: String,
    pub lambdas: Vec<ComplexSpec>,
    /// Highest lambda-derivative of `Delta` and `Delta_inf` to report.
    #[serde(default)]
    pub derivatives: usize,
    /// Second problem for the pair functions `F`, `F1`, `F2`.
    #[serde(default)]
    pub partner: Option<String>,
    #[serde(default)]
    pub at: AtSpec,
}

fn charfn(cfg: &RunConfig, p: &CharfnParams, out: &mut Output) -> Result<(), CliError> {
    check(p.derivatives <= 8, "params.derivatives: at most 8")?;
    let problem = cfg.problem(&p.problem)?;
    let partner = p.partner.as_ref().map(|n| cfg.problem(n)).transpose()?;
    let at = match p.at {
        AtSpec::Named(AtName::Pi) => EvalPoint::Pi,
        AtSpec::Named(AtName::D) => EvalPoint::DJump,
        AtSpec::Point(x) => {
            check(x > 0.0 && x <= PI, "params.at: point must lie in (0, pi]")?;
            EvalPoint::B(x)
        }
    };
    let list = lambdas(&p.lambdas)?;
    let with_integral = partner.is_some() && at == EvalPoint::Pi;
    let mut names = vec!["lambda".to_string(), "delta".into(), "delta_inf".into()];
    for j in 1..=p.derivatives {
        names.push(format!("delta_d{j}"));
        names.push(format!("delta_inf_d{j}"));
    }
    names.push("weyl".into());
    if partner.is_some() {
        names.extend(["f", "f1", "f2"].map(String::from));
    }
    if with_integral {
        names.push("f_integral".into());
    }
    out.table = Table::with_header(names.iter().flat_map(|n| [format!("{n}_re"), format!("{n}_im")]).collect());

    let mut samples = Vec::new();
    for lambda in list {
        let s = char_delta(&problem, lambda, p.derivatives)?;
        let mut row: Vec<Cell> = c(lambda).into();
        row.extend(c(s.derivatives[0].value()));
        row.extend(c(s.derivatives_inf[0].value()));
        for j in 1..=p.derivatives {
            row.extend(c(s.derivatives[j].value()));
            row.extend(c(s.derivatives_inf[j].value()));
        }
        let weyl = match weyl_m(&problem, lambda)? {
            WeylValue::Finite(m) => {
                row.extend(c(m));
                complex(m)
            }
            WeylValue::Pole => {
                row.extend([Cell::Num(f64::NAN), Cell::Num(f64::NAN)]);
                json!("pole")
            }
        };
        let mut entry = json!({
            "lambda": complex(lambda),
            "delta": s.derivatives.iter().map(|v| scaled(*v)).collect::<Vec<_>>(),
            "delta_inf": s.derivatives_inf.iter().map(|v| scaled(*v)).collect::<Vec<_>>(),
            "weyl": weyl,
        });
        if let Some(partner) = &partner {
            let f = f_function(&problem, partner, lambda, at)?;
            for v in [f.f, f.f1, f.f2] {
                row.extend(c(v.value()));
            }
            entry["pair"] = json!({ "x": f.x, "f": scaled(f.f), "f1": scaled(f.f1), "f2": scaled(f.f2) });
            if with_integral {
                let fi = f_integral(&problem, partner, lambda)?;
                row.extend(c(fi.value()));
                entry["pair"]["f_integral"] = scaled(fi);
            }
        }
        out.table.push(row);
        samples.push(entry);
        out.result = json!({ "samples": samples });
    }
    Ok(())
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProductParams {
    pub problem: String,
    #[serde(default)]
    pub which: WhichSpec,
    /// Zeros below this modulus enter the product.
    pub bound: f64,
    pub lambdas: Vec<ComplexSpec>,
}

fn product(cfg: &RunConfig, p: &ProductParams, out: &mut Output) -> Result<(), CliError> {
    check_bound(p.bound)?;
    let problem = cfg.problem(&p.problem)?;
    let which = p.which.which();
    let list = lambdas(&p.lambdas)?;
    let seq = find_eigenvalues(&problem, which, p.bound)?;
    let fit = fit_constant(&problem, &seq)?;
    let model = ProductModel::new(&seq, fit.constant, seq.len())?;
    let settings = Settings::default();
    let mut samples = Vec::new();
    out.result = json!({
        "zeros": seq.len(),
        "constant": complex(fit.constant),
        "median_ratio": complex(fit.median_ratio),
        "discrepancy": fit.discrepancy,
        "budget": fit.budget,
        "within_budget": fit.within_budget,
    });
    for lambda in list {
        let delta = char_value(&settings, &problem, which, lambda, 0)?[0];
        let g = truncated_product(&model, lambda);
        let rel = (delta - g.value).abs() / delta.abs();
        let [lr, li] = c(lambda);
        let [dr, di] = c(delta.value());
        let [gr, gi] = c(g.value.value());
        let [hr, hi] = c(g.half.value());
        out.table.push(vec![lr, li, dr, di, gr, gi, hr, hi, Cell::Num(rel)]);
        samples.push(json!({
            "lambda": complex(lambda),
            "delta": scaled(delta),
            "product": scaled(g.value),
            "half_product": scaled(g.half),
            "rel_error": rel,
        }));
        out.result["samples"] = json!(samples);
    }
    Ok(())
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthParams {
    pub problem: String,
    #[serde(default)]
    pub which: WhichSpec,
    /// Defaults to `10^2 .. 10^6`, two points per decade.
    #[serde(default)]
    pub ray: Option<RaySpec>,
}

fn growth(cfg: &RunConfig, p: &GrowthParams, out: &mut Output) -> Result<(), CliError> {
    let problem = cfg.problem(&p.problem)?;
    let ys = match &p.ray {
        Some(r) => r.samples()?,
        None => standard_ray(),
    };
    let g = char_growth(&problem, p.which.which(), &ys)?;
    for &(y, v) in &g.samples {
        out.table.push(vec![Cell::Num(y), Cell::Num(v), Cell::Num(g.predict(y))]);
    }
    out.result = json!({
        "c": g.c,
        "p": g.p,
        "constant": g.constant,
        "residual": g.residual,
        "samples": g.samples,
    });
    Ok(())
}

fn default_delta() -> f64 {
    0.2
}

fn default_angle() -> f64 {
    PI / 2.0
}

fn default_all() -> String {
    "all".into()
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptParams {
    pub pair: [String; 2],
    #[serde(default)]
    pub r: f64,
    pub x0: f64,
    pub m: i32,
    /// `y1y1`, `y1y2`, `y2y1`, `y2y2` or `all`.
    #[serde(default = "default_all")]
    pub combination: String,
    #[serde(default)]
    pub ray: Option<RaySpec>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_angle")]
    pub angle: f64,
}

fn pair(cfg: &RunConfig, names: &[String; 2]) -> Result<(Problem, Problem), CliError> {
    Ok((cfg.problem(&names[0])?, cfg.problem(&names[1])?))
}

fn asympt(cfg: &RunConfig, p: &AsymptParams, out: &mut Output) -> Result<(), CliError> {
    let (a, b) = pair(cfg, &p.pair)?;
    let combos: Vec<Combination> = if p.combination == "all" {
        Combination::ALL.to_vec()
    } else {
        vec![Combination::parse(&p.combination)
            .ok_or_else(|| CliError::Validation(format!("params.combination: unknown `{}`", p.combination)))?]
    };
    check(p.m >= -1, "params.m: must be at least -1")?;
    check(p.delta.is_finite() && p.delta >= 0.0, "params.delta: must be non-negative")?;
    check(p.angle > 0.0 && p.angle < PI, "params.angle: must lie in (0, pi)")?;
    let mut opts = DecayOptions { delta: p.delta, angle: p.angle, ..DecayOptions::default() };
    if let Some(r) = &p.ray {
        opts.ys = r.samples()?;
    }
    let mut fits = Vec::new();
    let mut all_pass = true;
    for comb in combos {
        let fit = decay_order_fit(&a, &b, p.r, p.x0, p.m, comb, &opts)?;
        all_pass &= fit.pass;
        for s in &fit.samples {
            out.table.push(vec![
                Cell::Text(comb.name().into()),
                Cell::Num(s.y),
                Cell::Num(s.ln_abs),
                Cell::Num(s.ln_normalized),
                Cell::Bool(s.below_floor),
            ]);
        }
        fits.push(json!({
            "combination": comb.name(),
            "claimed_exponent": fit.claimed_exponent,
            "fitted_slope": fit.slope,
            "identically_zero": fit.identically_zero,
            "pass": fit.pass,
        }));
        out.result = json!({ "fits": fits });
        out.pass = Some(all_pass);
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Probe {
    Decay,
    Brackets,
    Ratio,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RepeatSpec {
    pub lambda: ComplexSpec,
    pub count: usize,
}

/// Entries of a spectrum of the first problem to leave out or repeat.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionSpec {
    #[serde(default)]
    pub removed: Vec<ComplexSpec>,
    /// Also leave out this many of the smallest eigenvalues.
    #[serde(default)]
    pub removed_first: usize,
    #[serde(default)]
    pub repeated: Vec<RepeatSpec>,
}

fn default_tolerance() -> f64 {
    1e-8
}

fn default_kind() -> String {
    "f".into()
}

fn default_spectrum_bound() -> f64 {
    400.0
}

fn default_a_coeff() -> f64 {
    1.0
}

fn default_t_lo_fraction() -> f64 {
    0.25
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct UniqParams {
    pub probe: Probe,
    pub pair: [String; 2],
    /// Agreement point: the potentials coincide on `[b, pi]`.
    pub b: f64,
    pub m: i32,
    /// `brackets`: sample points; defaults to a fixed 20-point grid.
    #[serde(default)]
    pub lambdas: Option<Vec<ComplexSpec>>,
    /// `brackets`: largest acceptable relative gap.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// `ratio`: `f`, `f1` or `f-over-phi`.
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default)]
    pub w: Option<SelectionSpec>,
    #[serde(default)]
    pub w_inf: Option<SelectionSpec>,
    #[serde(default = "default_spectrum_bound")]
    pub spectrum_bound: f64,
    #[serde(default = "default_a_coeff")]
    pub a_coeff: f64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "default_t_lo_fraction")]
    pub t_lo_fraction: f64,
    #[serde(default)]
    pub ray: Option<RaySpec>,
}

fn selection(a: &Problem, which: Which, spec: &SelectionSpec, bound: f64) -> Result<Selection, CliError> {
    let mut removed: Vec<Complex64> = spec.removed.iter().map(|z| z.value()).collect();
    if spec.removed_first > 0 {
        let seq = find_eigenvalues(a, which, bound)?;
        let first = seq.lambdas();
        check(first.len() >= spec.removed_first, "params: removed_first exceeds the computed spectrum")?;
        removed.extend(first.into_iter().take(spec.removed_first));
    }
    let repeated = spec.repeated.iter().map(|r| (r.lambda.value(), r.count)).collect();
    Ok(Selection { removed, repeated })
}

fn uniq(cfg: &RunConfig, p: &UniqParams, out: &mut Output) -> Result<(), CliError> {
    let (a, b) = pair(cfg, &p.pair)?;
    match p.probe {
        Probe::Decay => {
            let mut opts = RayDecayOptions::default();
            if let Some(r) = &p.ray {
                opts.ys = r.samples()?;
            }
            let e = PairExperiment::new(a, b, p.b, p.m)?;
            let fit = ray_decay_probe(&e, &opts)?;
            out.table = Table::new(&["y", "ln_abs", "ln_normalized", "below_floor"]);
            for s in &fit.samples {
                out.table.push(vec![
                    Cell::Num(s.y),
                    Cell::Num(s.ln_abs),
                    Cell::Num(s.ln_normalized),
                    Cell::Bool(s.below_floor),
                ]);
            }
            out.result = json!({
                "bound_exponent": fit.bound_exponent,
                "slope": fit.slope,
                "identically_zero": fit.identically_zero,
                "tail_decreasing": fit.tail_decreasing,
                "pass": fit.pass,
            });
            out.pass = Some(fit.pass);
        }
        Probe::Brackets => {
            check(p.tolerance > 0.0, "params.tolerance: must be positive")?;
            let list = match &p.lambdas {
                Some(l) => lambdas(l)?,
                None => bracket_grid(),
            };
            let e = PairExperiment::new(a, b, p.b, p.m)?;
            let r = bracket_consistency(&e, &list, &Settings::tight())?;
            out.table = Table::new(&["lambda_re", "lambda_im", "gap", "within_tolerance"]);
            for (z, gap) in &r.per_lambda {
                out.table.push(vec![Cell::Num(z.re), Cell::Num(z.im), Cell::Num(*gap), Cell::Bool(*gap < p.tolerance)]);
            }
            out.result = json!({
                "formulas": r.formulas,
                "discrepancy": r.worst,
                "per_lambda": r.per_lambda.iter().map(|(z, g)| json!({ "lambda": complex(*z), "gap": g })).collect::<Vec<_>>(),
            });
            out.pass = Some(r.worst < p.tolerance);
        }
        Probe::Ratio => {
            let kind = RatioKind::parse(&p.kind)
                .ok_or_else(|| CliError::Validation(format!("params.kind: unknown `{}`", p.kind)))?;
            check_bound(p.spectrum_bound)?;
            check(p.t_lo_fraction >= 0.0 && p.t_lo_fraction < 1.0, "params.t_lo_fraction: must lie in [0, 1)")?;
            let w = p.w.as_ref().map(|s| selection(&a, Which::B, s, p.spectrum_bound)).transpose()?;
            let w_inf = p.w_inf.as_ref().map(|s| selection(&a, Which::BInf, s, p.spectrum_bound)).transpose()?;
            let e = PairExperiment::new(a, b, p.b, p.m)?.with_selections(w, w_inf)?;
            let mut opts = RatioOptions {
                spectrum_bound: p.spectrum_bound,
                a_coeff: p.a_coeff,
                epsilon: p.epsilon,
                t_lo_fraction: p.t_lo_fraction,
                ..RatioOptions::default()
            };
            if let Some(r) = &p.ray {
                opts.ys = r.samples()?;
            }
            let r = ratio_probe(&e, kind, &opts)?;
            out.table = Table::new(&["y", "ln_numerator", "ln_g", "ln_ratio", "decreasing"]);
            let mut prev = f64::INFINITY;
            for s in &r.samples {
                out.table.push(vec![
                    Cell::Num(s.y),
                    Cell::Num(s.ln_numerator),
                    Cell::Num(s.ln_g),
                    Cell::Num(s.ln_ratio),
                    Cell::Bool(s.ln_ratio < prev),
                ]);
                prev = s.ln_ratio;
            }
            out.result = json!({
                "kind": kind.name(),
                "coefficients": [r.coefficients.0, r.coefficients.1, r.coefficients.2],
                "counting_margin": r.counting_margin,
                "slope": r.slope,
                "identically_zero": r.identically_zero,
                "tail_decreasing": r.tail_decreasing,
            });
            out.pass = Some(r.tail_decreasing);
        }
    }
    Ok(())
}

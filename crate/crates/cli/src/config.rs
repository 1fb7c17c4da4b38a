//! Run configuration: a JSON document naming problems and one command's
//! parameters.

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use sturmdisc::{BoundaryAtPi, PotentialExpr, Problem};

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments; exit code 1.
    Validation(String),
    /// The library failed on valid input; exit code 2.
    Computation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Computation(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Computation(m) => m,
        }
    }
}

impl From<sturmdisc::Error> for CliError {
    fn from(e: sturmdisc::Error) -> Self {
        use sturmdisc::Error as E;
        match e {
            E::Syntax { .. }
            | E::UnknownIdentifier { .. }
            | E::EmptyInput
            | E::InvalidArgument(_)
            | E::OutOfDomain(_)
            | E::Precondition(_)
            | E::ZeroInSequence
            | E::VanishingAtOrigin => CliError::Validation(e.to_string()),
            other => CliError::Computation(other.to_string()),
        }
    }
}

/// A real number or a `[re, im]` pair.
#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq)]
#[serde(untagged)]
pub enum ComplexSpec {
    Real(f64),
    Pair([f64; 2]),
}

impl Default for ComplexSpec {
    fn default() -> Self {
        ComplexSpec::Real(0.0)
    }
}

impl ComplexSpec {
    pub fn value(self) -> Complex64 {
        match self {
            ComplexSpec::Real(r) => Complex64::new(r, 0.0),
            ComplexSpec::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq)]
pub enum DirichletTag {
    #[serde(rename = "dirichlet")]
    Dirichlet,
}

/// `H` as a number, a `[re, im]` pair or `"dirichlet"`.
#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq)]
#[serde(untagged)]
pub enum BoundarySpec {
    Dirichlet(DirichletTag),
    Robin(ComplexSpec),
}

impl Default for BoundarySpec {
    fn default() -> Self {
        BoundarySpec::Robin(ComplexSpec::default())
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub lo: f64,
    pub hi: f64,
    pub expr: String,
}

/// One expression on `[0, pi]` or a list of pieces tiling it.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(untagged)]
pub enum PotentialSpec {
    Expr(String),
    Pieces(Vec<PieceSpec>),
}

fn one() -> f64 {
    1.0
}

fn half_pi() -> f64 {
    PI / 2.0
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub q: PotentialSpec,
    #[serde(default)]
    pub h: ComplexSpec,
    #[serde(default, alias = "H")]
    pub big_h: BoundarySpec,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default)]
    pub gamma: ComplexSpec,
    #[serde(default = "half_pi")]
    pub d: f64,
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Problem, sturmdisc::Error> {
        let q = match &self.q {
            PotentialSpec::Expr(s) => PotentialExpr::parse(s)?,
            PotentialSpec::Pieces(p) => {
                let parts: Vec<(f64, f64, &str)> = p.iter().map(|p| (p.lo, p.hi, p.expr.as_str())).collect();
                PotentialExpr::piecewise(&parts)?
            }
        };
        let big_h = match self.big_h {
            BoundarySpec::Dirichlet(_) => BoundaryAtPi::Dirichlet,
            BoundarySpec::Robin(c) => BoundaryAtPi::Robin(c.value()),
        };
        Problem::new(q, self.h.value(), big_h, self.beta, self.gamma.value(), self.d)
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub format: Option<Format>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problems: BTreeMap<String, ProblemSpec>,
    /// Must match the subcommand when present.
    #[serde(default)]
    pub command: Option<String>,
    #[serde(default = "empty_object")]
    pub params: serde_json::Value,
    #[serde(default)]
    pub output: OutputSpec,
}

fn empty_object() -> serde_json::Value {
    serde_json::Value::Object(Default::default())
}

/// Deserializes with the failing field path in the error message.
fn parse_at<T: DeserializeOwned>(value: &serde_json::Value, prefix: &str) -> Result<T, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let at = match (prefix.is_empty(), path.as_str()) {
            (true, p) => p.to_string(),
            (false, ".") => prefix.to_string(),
            (false, p) => format!("{prefix}.{p}"),
        };
        CliError::Validation(format!("{at}: {}", e.into_inner()))
    })
}

impl RunConfig {
    pub fn from_str(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config is not valid JSON: {e}")))?;
        parse_at(&value, "")
    }

    pub fn params<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        parse_at(&self.params, "params")
    }

    pub fn problem(&self, name: &str) -> Result<Problem, CliError> {
        let spec = self
            .problems
            .get(name)
            .ok_or_else(|| CliError::Validation(format!("params: unknown problem `{name}`")))?;
        spec.build().map_err(|e| CliError::Validation(format!("problems.{name}: {e}")))
    }
}

/// Geometric samples `10^lo .. 10^hi`.
#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RaySpec {
    pub lo: f64,
    pub hi: f64,
    pub per_decade: usize,
}

impl RaySpec {
    pub fn samples(&self) -> Result<Vec<f64>, CliError> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi && self.per_decade >= 1) {
            return Err(CliError::Validation("params.ray: need lo < hi and per_decade >= 1".into()));
        }
        if self.hi > 8.0 {
            return Err(CliError::Validation("params.ray.hi: rays end at 10^8 or below".into()));
        }
        Ok(sturmdisc::entire::geometric_ray(self.lo, self.hi, self.per_decade))
    }
}

pub fn check(cond: bool, msg: &str) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Validation(msg.to_string()))
    }
}

//! Spectral computations for Sturm–Liouville operators
//! `-y'' + q y = lambda y` on `(0, pi)` with complex potential, Robin or
//! Dirichlet boundary data and a transmission (jump) condition at an interior
//! point `d`.
//!
//! The crate is organised bottom-up:
//!
//! - [`expr`], [`problem`]: potential expressions and operator data.
//! - [`engine`]: shooting solutions and their lambda-derivative chains.
//! - [`charfn`]: characteristic functions, the Weyl function and the pair
//!   functions `F`, `F1`, `F2`.
//! - [`spectrum`]: eigenvalues with multiplicities by the argument principle.
//! - [`norming`]: generalized norming constants and their derivative identity.
//! - [`entire`]: canonical products, growth fits and counting bounds.
//! - [`asymptotics`]: leading-order asymptotics and the high-frequency
//!   expansion of fundamental solutions.
//! - [`lab`]: decay and ratio probes for pairs of problems.

pub mod error;
pub mod expr;
pub mod ode;
pub mod problem;
pub mod scaled;
pub mod engine;
pub mod charfn;
pub mod contour;
pub mod spectrum;
pub mod norming;
pub mod entire;
pub mod asymptotics;
pub mod funcs;
pub mod lab;
pub mod quad;

/// Library version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use problem::{BoundaryAtPi, PotentialExpr, Problem, Side};
pub use scaled::Scaled;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at offset {pos}: expected {}", expected.join(" or "))]
    Syntax { pos: usize, expected: Vec<String> },

    #[error("unknown identifier `{name}` at offset {pos}")]
    UnknownIdentifier { name: String, pos: usize },

    #[error("empty expression")]
    EmptyInput,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("x = {0} lies outside [0, pi]")]
    OutOfDomain(f64),

    #[error("non-finite spectral parameter {0}")]
    NonFiniteLambda(String),

    #[error("integrator could not meet tolerance near x = {x} (scaled local error {worst_error:.3e})")]
    Integrator { x: f64, worst_error: f64 },

    #[error("solution chains live on different grids")]
    MismatchedGrids,

    #[error("zero of the characteristic function on the contour after {nudges} nudges")]
    BoundaryZero { nudges: usize },

    #[error("phase tracking failed near {at}: adjacent samples differ by at least pi/2")]
    PhaseStep { at: String },

    #[error("subdivision depth exhausted with {remaining} unresolved zeros")]
    SubdivisionExhausted { remaining: i64 },

    #[error("Newton refinement did not converge from {start}")]
    Refinement { start: String },

    #[error("zero count mismatch: boundary winding {expected}, located {found}")]
    Incomplete { expected: i64, found: i64 },

    #[error("winding count unstable across radii: {counts:?}")]
    UnstableMultiplicity { counts: Vec<i64> },

    #[error("multiplicity {multiplicity} inconsistent with chain residual {residual:.3e}")]
    MultiplicityMismatch { multiplicity: usize, residual: f64 },

    #[error("quadrature failed to converge on [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },

    #[error("zero entry in a product sequence")]
    ZeroInSequence,

    #[error("characteristic function vanishes at 0; shift the potential by a constant")]
    VanishingAtOrigin,

    #[error("degenerate least-squares design: {0}")]
    DegenerateFit(String),

    #[error("product vanishes at sample lambda = {0}")]
    ProductVanishes(String),

    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

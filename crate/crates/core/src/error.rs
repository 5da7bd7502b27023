use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite operand in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "inner solver did not converge at outer iteration {iteration} \
         ({inner_iterations} inner iterations, final residual {residual:e})"
    )]
    InnerNonConvergence {
        iteration: usize,
        inner_iterations: usize,
        residual: f64,
    },

    #[error("empty feasible interval at coordinate {coord}: [{lo}, {hi}]")]
    EmptyInterval { coord: usize, lo: f64, hi: f64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("insufficient data: need {needed}, found {found}")]
    InsufficientData { needed: usize, found: usize },

    #[error("problem has no known solution")]
    MissingKnownSolution,

    #[error("parameters are not admissible: {0}")]
    Inadmissible(String),

    #[error("non-finite value in network layer {layer}")]
    NonFiniteLayer { layer: usize },

    #[error("malformed model file: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for argument `{argument}`: expected {expected} coordinates, got {got}")]
    DimensionMismatch {
        argument: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("argument `{argument}` has a non-finite coordinate at index {index}")]
    NonFinite {
        argument: &'static str,
        index: usize,
    },

    #[error("mapping is defined on `{expected}` but was evaluated on `{got}`")]
    AlgebraMismatch { expected: String, got: String },

    #[error("unknown algebra name `{0}` (expected `complex`, `pointwise:n`, or `matrix:n`)")]
    UnknownAlgebra(String),

    #[error("rho must differ from 0, 1 and -1")]
    InvalidRho,

    #[error("declared parity `{declared}` contradicted at sampled point {witness}")]
    ParityViolation { declared: String, witness: String },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("sample grid is empty")]
    EmptyGrid,

    #[error("all control denominators vanished on the grid")]
    DegenerateControl,

    #[error("iterate became non-finite at step {step}")]
    Divergence { step: usize },

    #[error("contraction constant must lie strictly inside (0, 1), got {0}")]
    InvalidLipschitz(f64),

    #[error("inadmissible input: {0}")]
    Inadmissible(String),

    #[error("serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("division by zero during evaluation")]
    DivisionByZero,

    #[error("non-finite value during evaluation")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("frame matrix is singular at {0:?}")]
    SingularFrame(Vec<f64>),

    #[error("zero vector or multivector has no degree")]
    ZeroDegree,

    #[error("not an immersion at parameter point {0:?}")]
    NotImmersion(Vec<f64>),

    #[error("tangent flag changes across the grid: {0}")]
    NonConstantFlag(String),

    #[error("immersion is not ruled: {0}")]
    NotRuled(String),

    #[error("invalid cylinder: {0}")]
    InvalidCylinder(String),

    #[error("numerical blow-up: {0}")]
    Overflow(String),

    #[error("fundamental matrix is singular at x1 = {0}")]
    SingularFundamental(f64),

    #[error("rank deficient horizontal data: rank {rank} < {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("model file line {line}: {message}")]
    Model { line: usize, message: String },

    #[error("model constraint violated: {0}")]
    Constraint(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

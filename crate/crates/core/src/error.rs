use std::fmt;

use thiserror::Error;

/// Location-carrying parse failure for the expression grammar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    Arity { func: String },
    UnknownVariable(String),
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::Syntax(msg) => write!(f, "syntax error at offset {}: {msg}", self.offset),
            ParseErrorKind::Arity { func } => write!(
                f,
                "arity error at offset {}: `{func}` takes exactly one argument",
                self.offset
            ),
            ParseErrorKind::UnknownVariable(name) => {
                write!(f, "unknown variable `{name}` at offset {}", self.offset)
            }
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("metric is not positive definite at {at}")]
    NotPositiveDefinite { at: String },

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("degree out of range: {0}")]
    DegreeOutOfRange(String),

    #[error("bidegree mismatch: ({0},{1}) vs ({2},{3})")]
    BidegreeMismatch(usize, usize, usize, usize),

    #[error("zero vector")]
    ZeroVector,

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("form is not holomorphic: dbar residual {0:.3e}")]
    NotHolomorphic(f64),

    #[error("hypothesis violated: kappa = {0:.6e} is negative")]
    HypothesisViolated(f64),

    #[error("degenerate basis: {0}")]
    DegenerateBasis(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("{context}: {message}")]
    Manifest { context: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

/// Errors raised by the toolkit. Each variant maps onto one of the documented
/// failure classes (alphabet, symmetry, input, parameter, domain, ...).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown letter `{0}`")]
    UnknownLetter(String),
    #[error("malformed word `{0}`")]
    MalformedWord(String),
    #[error("set is not closed under inversion: {0}")]
    NotSymmetric(String),
    #[error("generating set is empty")]
    EmptySet,
    #[error("invalid input: {0}")]
    Input(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("outside the admissible domain: {0}")]
    Domain(String),
    #[error("theorem hypotheses not met: {0}")]
    Hypothesis(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid multiplication table: {0}")]
    Table(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

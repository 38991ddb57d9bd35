use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be at least {min}, got {n}")]
    Dimension { n: usize, min: usize },

    #[error("invalid index pair ({i}, {j}) for dimension {n}")]
    Index { i: usize, j: usize, n: usize },

    #[error("expected {expected} packed values, got {got}")]
    Length { expected: usize, got: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("matrix is not symmetric at ({i}, {j}): {a} vs {b}")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },

    #[error("pair ({i}, {j}) is missing")]
    MissingPair { i: usize, j: usize },

    #[error("pair ({i}, {j}) appears more than once with conflicting weights")]
    ConflictingPair { i: usize, j: usize },

    #[error("non-finite value at packed index {index}")]
    NonFinite { index: usize },

    #[error("{count} tied values present and tie policy is 'error'")]
    Ties { count: usize },

    #[error("entry variance is zero for n = {n}; statistic undefined")]
    DegenerateVariance { n: usize },

    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("dimension {n} exceeds dense eigensolver cap {cap}")]
    CapExceeded { n: usize, cap: usize },

    #[error("vector is not unit norm (norm = {norm})")]
    NotUnit { norm: f64 },

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("invalid distribution spec at position {pos}: {msg}")]
    Spec { pos: usize, msg: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("replicate {index}: {source}")]
    Replicate {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Coarse category, stable across releases: `io`, `parse`, `ties`,
    /// `numerical` or `parameter`.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io(_) => "io",
            Error::Parse { .. }
            | Error::Asymmetric { .. }
            | Error::MissingPair { .. }
            | Error::ConflictingPair { .. }
            | Error::NonFinite { .. }
            | Error::Spec { .. }
            | Error::Json(_) => "parse",
            Error::Ties { .. } => "ties",
            Error::NoConvergence { .. }
            | Error::DegenerateVariance { .. }
            | Error::CapExceeded { .. } => "numerical",
            Error::Replicate { source, .. } => source.kind(),
            Error::Dimension { .. }
            | Error::Index { .. }
            | Error::Length { .. }
            | Error::NotUnit { .. }
            | Error::Distribution(_)
            | Error::Parameter(_) => "parameter",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replicate_errors_report_the_inner_kind() {
        let e = Error::Replicate {
            index: 3,
            source: Box::new(Error::Ties { count: 2 }),
        };
        assert_eq!(e.kind(), "ties");
        assert!(e.to_string().contains('3'));
    }
}

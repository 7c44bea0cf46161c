use std::io;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("rank {value} appears more than once")]
    DuplicateRank { value: usize },
    #[error("rank {value} is outside 1..={n}")]
    RankOutOfRange { value: usize, n: usize },
    #[error("projection subset is empty")]
    EmptySubset,
    #[error("element {element} is outside 1..={n}")]
    ElementOutOfRange { element: usize, n: usize },
    #[error("element {element} is not in the subset")]
    NotInSubset { element: usize },
    #[error("code entry {value} at coordinate {index} exceeds {index} - 1")]
    NotSubdiagonal { index: usize, value: usize },
    #[error("Lehmer pair is inconsistent at element {element}")]
    InconsistentPair { element: usize },
    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("metric {metric} does not apply to these inputs")]
    MetricKindMismatch { metric: &'static str },
    #[error("ranking sample is empty")]
    EmptySample,
    #[error("sample mixes permutations and partial rankings")]
    MixedKinds,
    #[error("dispersion phi = {phi} is outside the admissible range")]
    InvalidPhi { phi: f64 },
    #[error("n = {n} exceeds the enumeration limit {max}")]
    TooLarge { n: usize, max: usize },
    #[error("parameter regime violated: {0}")]
    RegimeViolated(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: expected {expected} elements, found {found}")]
    InconsistentN {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("selection infeasible: {0}")]
    SelectionInfeasible(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

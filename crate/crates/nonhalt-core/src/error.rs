use thiserror::Error;

/// Errors raised by the core types and operations.
///
/// Absence of a detection result or refusal of a certificate are *not*
/// errors; those are ordinary return values. These variants cover violated
/// preconditions and malformed inputs only.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sequence must be non-empty")]
    EmptySequence,

    #[error("cycle is not primitive: it repeats a block of length {root} ({len} total)")]
    NonPrimitiveCycle { root: usize, len: usize },

    #[error("non-finite logit at index {index}")]
    NonFiniteLogit { index: usize },

    #[error("probability {value} at index {index} is outside [0, 1]")]
    ProbabilityOutOfRange { index: usize, value: f64 },

    #[error("probabilities sum to {sum}, expected 1 within {tolerance}")]
    ProbabilitySum { sum: f64, tolerance: f64 },

    #[error("vocabulary needs at least 2 symbols, got {0}")]
    VocabTooSmall(usize),

    #[error("vocabulary symbol at position {position} has id {id}; ids must equal positions")]
    VocabIdMismatch { position: usize, id: u32 },

    #[error("eos index {index} is outside the vocabulary (size {size})")]
    EosOutOfRange { index: usize, size: usize },

    #[error("{what} length {len} does not match vocabulary size {vocab}")]
    LengthMismatch {
        what: &'static str,
        len: usize,
        vocab: usize,
    },

    #[error("invalid sampler parameter: {0}")]
    InvalidSamplerParameter(String),

    #[error("top-k value {k} outside [1, {n}]")]
    TopKOutOfRange { k: usize, n: usize },

    #[error("top-p value {p} outside [0, 1]")]
    TopPOutOfRange { p: f64 },

    #[error("rotation offset {i} outside [0, {c})")]
    RotationOffsetOutOfRange { i: usize, c: usize },

    #[error("invalid anomaly: {0}")]
    InvalidAnomaly(String),

    #[error("stream of length {len} is shorter than the anomaly's ell {ell}")]
    StreamTooShort { len: usize, ell: usize },

    #[error("sampler configuration must be deterministic for this operation")]
    NotDeterministic,

    #[error("exhaustive search space {space} exceeds the evaluation budget {budget}")]
    SearchSpaceTooLarge { space: u128, budget: usize },

    #[error("symbol index {index} is outside the vocabulary (size {size})")]
    SymbolOutOfRange { index: usize, size: usize },

    #[error("guard policy rejected: {0}")]
    InvalidGuardPolicy(String),

    #[error("guard already terminated; no further symbols may be fed")]
    GuardTerminated,

    #[error("fixture parse error at line {line}: {message}")]
    FixtureParse { line: usize, message: String },

    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("state {state} appears in more than one block")]
    Overlap { state: u64 },
    #[error("state {state} is not covered by any block")]
    Coverage { state: u64 },
    #[error("residue {residue} mod {modulus} is claimed {count} times per period")]
    Residue { residue: u64, modulus: u64, count: usize },
    #[error("index {index} out of range (size {size})")]
    Index { index: usize, size: usize },
    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("operation needs a non-empty list")]
    EmptyList,
    #[error("message function evaluated on an empty block")]
    EmptyBlock,
    #[error("utility u({action}, {state}) is undefined")]
    UndefinedUtility { action: i64, state: usize },
    #[error("block has zero prior mass")]
    ZeroMassBlock,
    #[error("exhaustive check limited to {limit} states, got {size}")]
    SizeLimitExceeded { limit: usize, size: usize },
    #[error("unknown message function family `{0}`")]
    UnknownFamily(String),
    #[error("unknown property suite `{0}`")]
    UnknownSuite(String),
    #[error("self-loop on agent {0}")]
    SelfLoop(usize),
    #[error("expected {expected} labels, got {got}")]
    LabelMismatch { expected: usize, got: usize },
    #[error("a profile needs at least two agents, got {0}")]
    TooFewAgents(usize),
    #[error("no fixed point within {0} successor steps")]
    BudgetExceeded(usize),
    #[error("ordinal budget {0} exceeded")]
    OrdinalBudgetExceeded(String),
    #[error("no shift certificate found at ordinal {0}")]
    NoCertificateFound(String),
    #[error("shift certificate does not hold: {0}")]
    CertificateInvalid(String),
    #[error("truncation mismatch at stage {stage}, agent {agent}: {detail}")]
    Mismatch { stage: usize, agent: usize, detail: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("operation needs a {expected} scenario")]
    Kind { expected: &'static str },
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

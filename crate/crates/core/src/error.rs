use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the coding, repair and storage layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("field modulus {0} out of supported range")]
    UnsupportedModulus(u32),
    #[error("operands live in different fields (q={left} vs q={right})")]
    ModulusMismatch { left: u32, right: u32 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is singular")]
    Singular,
    #[error("linear system is inconsistent")]
    Inconsistent,
    #[error("linear system has no unique solution")]
    Underdetermined,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("need at least {needed} blocks, got {got}")]
    InsufficientBlocks { needed: usize, got: usize },
    #[error("blocks {0:?} do not determine the stripe")]
    UndecodableSubset(Vec<usize>),
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("no repair plan registered for node {0}")]
    MissingPlan(usize),
    #[error("no repair plan for node {0} within {1} symbols")]
    InfeasiblePlan(usize, usize),
    #[error("coefficient search exhausted after {0} candidates")]
    SearchExhausted(usize),
    #[error("survivor data inconsistent with the code")]
    CorruptSurvivor,
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("unsupported failure pattern: {0}")]
    UnsupportedPattern(String),
    #[error("code is not MDS; multi-node repair is undefined")]
    NonMds,
    #[error("more than {max} nodes ({got}) for exhaustive enumeration")]
    TooManyNodes { got: usize, max: usize },
    #[error("invalid probability {0}")]
    InvalidProbability(f64),
    #[error("file of {file} symbols is not a multiple of fragment size {fragment}")]
    IndivisibleFile { file: u64, fragment: u64 },
    #[error("symbols of GF({0}) cannot be persisted one byte each")]
    SymbolOverflow(u32),
    #[error("checksum mismatch in {0}")]
    ChecksumMismatch(String),
    #[error("shard for node {0} is missing")]
    MissingShard(usize),
    #[error("malformed {what}: {reason}")]
    Format { what: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(what: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Format {
            what: what.into(),
            reason: reason.into(),
        }
    }
}

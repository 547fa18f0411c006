use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid frequency system: {0}")]
    InvalidSystem(String),

    #[error("frequency prefix too short: largest materialized frequency {largest} does not exceed E = {energy}")]
    PrefixTooShort { largest: f64, energy: f64 },

    #[error("lattice point count exceeds the cap of {cap}")]
    CountCap { cap: u64 },

    #[error("operands belong to different frequency systems")]
    SystemMismatch,

    #[error("mode {mode} out of range (available: {available})")]
    ModeOutOfRange { mode: usize, available: usize },

    #[error("series diverges: {0}")]
    Divergent(String),

    #[error("series truncation needs more than {cap} terms")]
    TruncationCap { cap: usize },

    #[error("no saddle bracket in [1e-12, 1e6] for E = {0}")]
    BracketNotFound(f64),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("operator has indefinite parity; split it into even and odd parts first")]
    IndefiniteParity,

    #[error("incompatible Fock space: {0}")]
    IncompatibleSpace(String),

    #[error("beta times the energy span ({0}) exceeds 700; use the log-space routines")]
    Overflow(f64),

    #[error("dimension {dim} exceeds the cap of {cap}")]
    TooLarge { dim: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

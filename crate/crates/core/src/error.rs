use thiserror::Error;

use crate::sfs::SfsWitness;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row} sums to {sum}, which is not within tolerance of 1")]
    RowSum { row: usize, sum: f64 },

    #[error("chain is reducible: {components} strongly connected components")]
    ReducibleChain { components: usize },

    #[error("chain is periodic with period {period}")]
    PeriodicChain { period: usize },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("work budget of {budget} traversal steps exceeded")]
    WorkBudgetExceeded { budget: u64 },

    #[error("{n} states exceeds the exhaustive-search limit of {max}")]
    SizeGuard { n: usize, max: usize },

    #[error("sequence has no realizable preimage (first failure at position {position})")]
    UnrealizableSequence { position: usize },

    #[error("ambiguous decoding: {0}")]
    Ambiguous(String),

    #[error("need at least {needed} trace entries, got {len}")]
    InsufficientData { len: usize, needed: usize },

    #[error("partition does not satisfy SFS({order})")]
    NotSfs {
        order: usize,
        witness: Box<SfsWitness>,
    },

    #[error("input is not valid UTF-8: {0}")]
    Encoding(#[from] std::str::Utf8Error),

    #[error("corpus is empty after preprocessing")]
    EmptyCorpus,

    #[error("trained chain is degenerate: {0}")]
    DegenerateChain(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable identifier, used in structured error output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::RowSum { .. } => "row_sum",
            Error::ReducibleChain { .. } => "reducible_chain",
            Error::PeriodicChain { .. } => "periodic_chain",
            Error::Convergence { .. } => "convergence",
            Error::WorkBudgetExceeded { .. } => "work_budget_exceeded",
            Error::SizeGuard { .. } => "size_guard",
            Error::UnrealizableSequence { .. } => "unrealizable_sequence",
            Error::Ambiguous(_) => "ambiguous",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::NotSfs { .. } => "not_sfs",
            Error::Encoding(_) => "encoding",
            Error::EmptyCorpus => "empty_corpus",
            Error::DegenerateChain(_) => "degenerate_chain",
            Error::InvalidModel(_) => "invalid_model",
            Error::InvalidPartition(_) => "invalid_partition",
            Error::InvalidInput(_) => "invalid_input",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

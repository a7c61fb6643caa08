use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("invalid config: {0}")]
    ConfigValidation(String),

    #[error("degenerate Markov chain: alpha + beta must be positive")]
    DegenerateChain,

    #[error("statistic undefined on an empty sample set")]
    EmptySamples,

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("simulation invariant violated: {0}")]
    Invariant(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("run lengths differ: {0}")]
    MismatchedRuns(String),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

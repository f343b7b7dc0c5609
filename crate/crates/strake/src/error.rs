use thiserror::Error;

/// Crate-wide error type. Variants map onto CLI exit codes:
/// configuration and I/O problems exit 4, invalid elements exit 2,
/// geometric and partitioning failures exit 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("argument error: {0}")]
    Argument(String),
    #[error("parameter out of range: {0}")]
    Range(String),
    #[error("geometric failure: {0}")]
    Geometric(String),
    #[error("partition failure: {0}")]
    Partition(String),
    #[error("sizing error: {0}")]
    Sizing(String),
    #[error("conformality error: {0}")]
    Conformality(String),
    #[error("relaxation failure: {0}")]
    Relaxation(String),
    #[error("split failure: {0}")]
    Split(String),
    #[error("merge failure: {0}")]
    Merge(String),
    #[error("validation failure: {0}")]
    Validation(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("export error: {0}")]
    Export(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) => 2,
            Error::Config(_) | Error::Parse(_) | Error::Io(_) | Error::Export(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

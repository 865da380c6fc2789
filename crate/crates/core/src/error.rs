use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid write to row {row}: {reason}")]
    InvalidWrite { row: usize, reason: String },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("invalid base {found:?} at position {position}")]
    Encoding { position: usize, found: char },

    #[error("invalid base {found:?} at line {line}, column {column}")]
    Fasta {
        line: usize,
        column: usize,
        found: char,
    },

    #[error("query error: {0}")]
    Query(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by corpus processing, training, model I/O and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("invalid UTF-8 on line {line} at byte offset {offset}")]
    Decode { line: usize, offset: usize },

    #[error("corpus contains no tokens")]
    NoTokens,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no word satisfies the minimum target count")]
    NoEligibleWords,

    #[error("negative table holds only the target id {0}")]
    OnlyTarget(u32),

    #[error("empty context")]
    EmptyContext,

    #[error("id {id} out of range for {rows} rows")]
    IdOutOfRange { id: u32, rows: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("incompatible model file: {0}")]
    Incompatible(String),

    #[error("model file truncated in {section} section")]
    Truncated { section: &'static str },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("training diverged in epoch {epoch} (non-finite parameters); lower the learning rate")]
    Diverged { epoch: usize },

    #[error("need ≥2 usable records, got {usable}")]
    InsufficientRecords { usable: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

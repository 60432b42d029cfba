use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("problem file, line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("invalid field `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("no periodic kernel found in [{lo}, {hi}]; give continuation.lambda_star explicitly")]
    NoCandidates { lo: f64, hi: f64 },

    #[error(transparent)]
    Core(#[from] hamsfl::Error),

    #[error("serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

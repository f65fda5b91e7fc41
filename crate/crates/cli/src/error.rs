use std::path::PathBuf;

use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] genscope_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid value for `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("output: {0}")]
    Output(String),
}

impl CliError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Io { .. } => "io",
            CliError::Invalid { .. } => "invalid_argument",
            CliError::Csv(_) => "csv",
            CliError::Output(_) => "output",
        }
    }

    fn field(&self) -> Option<String> {
        match self {
            CliError::Core(e) => e.field(),
            CliError::Invalid { field, .. } => Some(field.clone()),
            _ => None,
        }
    }

    /// Machine-readable error document written to stderr on failure.
    pub fn to_json(&self) -> String {
        json!({
            "error": {
                "kind": self.kind(),
                "field": self.field(),
                "message": self.to_string(),
            }
        })
        .to_string()
    }
}

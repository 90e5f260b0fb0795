use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed YAML: {0}")]
    Yaml(#[from] serde_yaml::Error),

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A schema or weight file failed validation. `subject` names the offending
    /// attribute (or the whole file when empty).
    #[error("validation error{}: {message}", fmt_subject(.subject))]
    Validation { subject: String, message: String },

    #[error("table error: {0}")]
    Table(String),

    #[error("no weight entry for attribute `{0}`")]
    MissingWeights(String),

    #[error("ground truth references unknown {kind} `{name}`")]
    UnknownReference { kind: &'static str, name: String },

    #[error("wilcoxon signed-rank: no nonzero pairs")]
    NoNonzeroPairs,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

fn fmt_subject(subject: &str) -> String {
    if subject.is_empty() {
        String::new()
    } else {
        format!(" in `{subject}`")
    }
}

impl Error {
    pub(crate) fn validation(subject: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            subject: subject.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

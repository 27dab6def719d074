use std::path::PathBuf;

use crate::objective::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("contract error: {0}")]
    Contract(String),

    #[error("mapping rejected with {} violation(s): {}", .0.len(), describe(.0))]
    Rejected(Vec<Violation>),

    #[error("logic error: {0}")]
    Logic(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code for the error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Parse { .. } => 3,
            Error::Io { .. } => 4,
            Error::Contract(_) | Error::Logic(_) => 5,
            Error::Rejected(_) => 6,
            Error::Numerical(_) => 7,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Contract(_) => "contract",
            Error::Rejected(_) => "rejected",
            Error::Logic(_) => "logic",
            Error::Numerical(_) => "numerical",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
        }
    }
}

fn describe(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| format!("{:?}@{} (short {})", v.kind, v.subject, v.deficit))
        .collect::<Vec<_>>()
        .join(", ")
}

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid or missing configuration.
    #[error("config: {0}")]
    Config(String),

    #[error("{0}")]
    Core(#[from] entrobound::Error),

    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    /// Malformed input data.
    #[error("parse: {0}")]
    Parse(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for configuration and validity errors, 1 for I/O, parse and
    /// external-estimator failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_validity() => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core(e) if e.is_validity() => "validity",
            CliError::Core(_) => "external",
            CliError::Io { .. } => "io",
            CliError::Parse(_) => "parse",
        }
    }

    /// `error kind=<kind> code=<code>: <message>` on one line.
    pub fn one_line(&self) -> String {
        let msg = self.to_string().replace(['\n', '\r'], " ");
        format!("error kind={} code={}: {msg}", self.kind(), self.exit_code())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

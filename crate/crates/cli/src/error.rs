use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// One invalid config field: its dotted path and what was expected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl Issue {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n{}", list(.0))]
    Validation(Vec<Issue>),

    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{context}: {source}")]
    Runtime { context: String, source: ecmodes::Error },
}

fn list(issues: &[Issue]) -> String {
    issues.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n")
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    pub fn runtime(context: impl Into<String>, source: ecmodes::Error) -> Self {
        Self::Runtime { context: context.into(), source }
    }

    pub fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Validation(vec![Issue::new(path, message)])
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 2,
            Self::Runtime { .. } => 3,
            Self::Io { .. } => 4,
        }
    }

    /// Config paths named by the error, if any.
    pub fn paths(&self) -> Vec<&str> {
        match self {
            Self::Validation(issues) => issues.iter().map(|i| i.path.as_str()).collect(),
            Self::Runtime { context, .. } => vec![context.as_str()],
            Self::Io { .. } => Vec::new(),
        }
    }
}

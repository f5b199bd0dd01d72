use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{}", match line { Some(n) => format!("line {n}: {message}"), None => message.clone() })]
    Parse { line: Option<usize>, message: String },

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: cascade_core::Error,
    },

    #[error("{0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SimError {
    pub fn parse(line: Option<usize>, message: impl Into<String>) -> Self {
        SimError::Parse { line, message: message.into() }
    }

    /// 0 success, 1 I/O, 2 parse, 3 numerical failure, 4 dark line.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Io { .. } => 1,
            SimError::Parse { .. } => 2,
            SimError::Core { source: cascade_core::Error::DarkLine { .. }, .. } => 4,
            SimError::Core { .. } | SimError::Numerical(_) => 3,
        }
    }
}

/// Attaches the failing module and parameter point to a core error.
pub trait Context<T> {
    fn context(self, f: impl FnOnce() -> String) -> Result<T, SimError>;
}

impl<T> Context<T> for cascade_core::Result<T> {
    fn context(self, f: impl FnOnce() -> String) -> Result<T, SimError> {
        self.map_err(|source| SimError::Core { context: f(), source })
    }
}

use std::path::PathBuf;

use thiserror::Error;

/// Failures mapped onto the process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Schema(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    /// The message without the category prefix.
    pub fn message(&self) -> String {
        match self {
            CliError::Schema(m) | CliError::Numerical(m) => m.clone(),
            CliError::Io { path, source } => format!("{}: {source}", path.display()),
        }
    }
}

impl From<cartan_core::Error> for CliError {
    /// Bad expressions, model names and dimensions are config problems;
    /// everything else surfaced by the library is numerical.
    fn from(e: cartan_core::Error) -> Self {
        use cartan_core::Error as E;
        match e {
            E::Expr(_) | E::UnknownModel(_) | E::DimensionMismatch(_) | E::ShapeMismatch { .. } => CliError::Schema(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

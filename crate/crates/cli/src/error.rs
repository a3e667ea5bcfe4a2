use std::path::PathBuf;

/// Where a configuration value came from, for diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    File { path: PathBuf, line: usize },
    Env(String),
    Flag(&'static str),
    Default,
}

impl std::fmt::Display for Origin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Origin::File { path, line } => write!(f, "{}:{}", path.display(), line),
            Origin::Env(var) => write!(f, "environment variable {var}"),
            Origin::Flag(flag) => write!(f, "flag {flag}"),
            Origin::Default => write!(f, "config"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{origin}: key '{key}': {message}")]
    Config { origin: Origin, key: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    /// Invalid input detected by the library (bad parameters, unreadable records).
    #[error(transparent)]
    Input(triq::Error),
    #[error("numerical failure: {0}")]
    Numerical(triq::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<triq::Error> for CliError {
    fn from(e: triq::Error) -> Self {
        use triq::Error as E;
        match e {
            E::NumericalDrift { .. } | E::NonConvergence { .. } | E::NotHermitian { .. } | E::NotPhysical(_) => {
                CliError::Numerical(e)
            }
            other => CliError::Input(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

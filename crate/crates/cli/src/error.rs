use thiserror::Error;

/// Process exit statuses.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const INTERNAL: u8 = 1;
    pub const VALIDATION: u8 = 2;
    pub const DIVERGENCE: u8 = 3;
    pub const IO: u8 = 4;
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("{origin}: parse error: {message}")]
    Parse { origin: String, message: String },
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },
    #[error("{scenario}: state diverged at t = {t}")]
    Divergence { scenario: String, t: f64 },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("{0}: outputs differ between two identical runs")]
    Nondeterministic(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Parse { .. } | Self::Validation { .. } | Self::Usage(_) => exit::VALIDATION,
            Self::Divergence { .. } => exit::DIVERGENCE,
            Self::Io { .. } => exit::IO,
            Self::Nondeterministic(_) => exit::INTERNAL,
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

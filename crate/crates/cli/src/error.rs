use thiserror::Error;

/// Errors surfaced to the command line, each mapped to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{file}:{line}: field `{field}`: {message}")]
    Input {
        file: String,
        line: u64,
        field: String,
        message: String,
    },
    #[error("{file}: {message}")]
    File { file: String, message: String },
    #[error("{file}:{line}: calibration failed at pillar T={pillar}: {reason}")]
    Calibration {
        file: String,
        line: u64,
        pillar: f64,
        reason: String,
    },
    #[error("{0}")]
    Diagnostic(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input { .. } | CliError::File { .. } => 2,
            CliError::Calibration { .. } => 3,
            CliError::Diagnostic(_) => 4,
        }
    }

    pub fn input(file: &str, line: u64, field: &str, message: impl Into<String>) -> Self {
        CliError::Input {
            file: file.to_string(),
            line,
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub fn file(file: &str, message: impl Into<String>) -> Self {
        CliError::File {
            file: file.to_string(),
            message: message.into(),
        }
    }

    /// Attaches a location to a model error; calibration failures keep their pillar.
    pub fn from_core(file: &str, line: u64, field: &str, e: chjm_core::Error) -> Self {
        match e {
            chjm_core::Error::Calibration { pillar, reason } => CliError::Calibration {
                file: file.to_string(),
                line,
                pillar,
                reason,
            },
            other => CliError::input(file, line, field, other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

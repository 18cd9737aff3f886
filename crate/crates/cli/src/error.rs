use std::path::PathBuf;

use kjlab_core::LabError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Lab {
        context: String,
        #[source]
        source: LabError,
    },

    #[error("io error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn lab(context: impl Into<String>) -> impl FnOnce(LabError) -> Self {
        let context = context.into();
        move |source| CliError::Lab { context, source }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "ConfigError",
            CliError::Io { .. } => "Io",
            CliError::Lab { source, .. } => match source {
                LabError::InvalidGrid(_) => "InvalidGrid",
                LabError::GridMismatch(_) => "GridMismatch",
                LabError::NotKahler { .. } => "NotKahler",
                LabError::NotApplicable(_) => "NotApplicable",
                LabError::NotCritical { .. } => "NotCritical",
                LabError::NotElliptic { .. } => "NotElliptic",
                LabError::StepRejected { .. } => "StepRejected",
                LabError::Diverged { .. } => "Diverged",
                LabError::DegenerateConstant { .. } => "DegenerateConstant",
                LabError::PositivityLoss { .. } => "PositivityLoss",
                LabError::NoConvergence { .. } => "NoConvergence",
                LabError::NotGeodesic { .. } => "NotGeodesic",
                LabError::Format(_) => "Format",
                LabError::Io(_) => "Io",
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

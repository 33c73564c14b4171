//! Library side of the `ncs` command-line tool: configuration validation,
//! artifact emission, figure presets, and the structural metrics used to
//! check the preset fields.

pub mod emit;
pub mod figmetrics;
pub mod presets;

use ncs_core::NcsError;
use thiserror::Error;

/// CLI failure modes, each mapped to a stable process exit code.
#[derive(Error, Debug)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("deformation pole: {0}")]
    Pole(NcsError),
    #[error("divergence or overflow: {0}")]
    Divergence(NcsError),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(NcsError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::InvalidConfig(_) => 2,
            CliError::Pole(_) => 3,
            CliError::Divergence(_) => 4,
            CliError::Io(_) => 5,
            CliError::Other(_) => 2,
        }
    }

    /// Machine-readable error record printed to stderr on failure.
    pub fn record(&self) -> String {
        format!(
            "{{\"error\":\"{}\",\"exit_code\":{}}}",
            self.to_string().replace('"', "'"),
            self.exit_code()
        )
    }
}

impl From<NcsError> for CliError {
    fn from(e: NcsError) -> Self {
        match e {
            NcsError::DeformationPole { .. }
            | NcsError::PoleProximity { .. }
            | NcsError::UndefinedIndex { .. }
            | NcsError::RootAtEvaluationPoint { .. }
            | NcsError::GammaPole { .. } => CliError::Pole(e),
            NcsError::Divergent
            | NcsError::MagnitudeOverflow { .. }
            | NcsError::PfqDivergent { .. }
            | NcsError::NoConvergence { .. } => CliError::Divergence(e),
            NcsError::InvalidArgument(msg) => CliError::InvalidConfig(msg),
            other => CliError::Other(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

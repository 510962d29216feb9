//! CLI error type and its mapping onto process exit codes.

use std::path::PathBuf;

use bosonic_wiretap::Error as CoreError;
use thiserror::Error;

/// Exit code for a successful run.
pub const EXIT_OK: u8 = 0;
/// Exit code for a computation that ran but failed an assertion or bound.
pub const EXIT_FAILURE: u8 = 1;
/// Exit code for malformed flags, configs or parameters.
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("invalid {what}: {source}")]
    Parse {
        what: String,
        source: serde_json::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },

    #[error("serialization failed: {0}")]
    Serialize(String),

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Read { .. } | CliError::Parse { .. } => EXIT_USAGE,
            CliError::Write { .. } | CliError::Serialize(_) => EXIT_FAILURE,
            CliError::Core(e) => core_exit_code(e),
        }
    }
}

/// Invalid parameters are usage errors; everything raised while computing is a failure.
fn core_exit_code(e: &CoreError) -> u8 {
    match e {
        CoreError::EmptySet
        | CoreError::InvalidSet(_)
        | CoreError::OutOfRange(_)
        | CoreError::InvalidProbabilities(_)
        | CoreError::NonFinite(_)
        | CoreError::AlphabetMismatch(_)
        | CoreError::DimensionMismatch(..)
        | CoreError::RateBudget { .. } => EXIT_USAGE,
        CoreError::CutoffTooSmall { .. }
        | CoreError::MixedCutoffs(..)
        | CoreError::NotNormalized(_)
        | CoreError::InfiniteRelativeEntropy(_)
        | CoreError::OperatorOutOfRange { .. }
        | CoreError::CapExceeded { .. }
        | CoreError::RejectionBudget { .. } => EXIT_FAILURE,
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_kind() {
        assert_eq!(CliError::Core(CoreError::EmptySet).exit_code(), EXIT_USAGE);
        assert_eq!(
            CliError::Core(CoreError::CapExceeded {
                size: 2.0,
                cap: 1.0
            })
            .exit_code(),
            EXIT_FAILURE
        );
        assert_eq!(CliError::Usage("x".into()).exit_code(), EXIT_USAGE);
        assert_eq!(CliError::Serialize("x".into()).exit_code(), EXIT_FAILURE);
    }
}

//! Front end for `qsr-core`: run configuration, parameter presets and the
//! `qsr-lab` subcommands.

pub mod commands;
pub mod config;
pub mod preset;
pub mod validate;

use config::ConfigError;
use preset::UnknownPreset;

/// Exit status for each failure class.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const NUMERICAL: i32 = 3;
    pub const VALIDATION: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("config error: {0}")]
    Preset(#[from] UnknownPreset),
    #[error("{0}")]
    Core(#[from] qsr_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{failed} of {total} evaluations failed")]
    Partial { failed: usize, total: usize },
    #[error("{failed} of {total} validation checks failed")]
    Validation { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Preset(_) => exit::CONFIG,
            CliError::Core(e) if e.is_numerical() => exit::NUMERICAL,
            CliError::Core(qsr_core::Error::SingularModel(_)) => exit::NUMERICAL,
            CliError::Core(qsr_core::Error::Io(_)) => exit::IO,
            CliError::Core(_) => exit::CONFIG,
            CliError::Io(_) => exit::IO,
            CliError::Partial { .. } => exit::NUMERICAL,
            CliError::Validation { .. } => exit::VALIDATION,
        }
    }

    /// Suggested fix printed under the error, if any.
    pub fn hint(&self) -> Option<&'static str> {
        match self {
            CliError::Core(qsr_core::Error::Stability { .. }) => {
                Some("reduce simulate.dt or drive.xi, or start from a state closer to equilibrium")
            }
            CliError::Core(qsr_core::Error::Convergence { .. }) => {
                Some("loosen tol, or check that the temperature and spectral parameters are in range")
            }
            CliError::Core(qsr_core::Error::Conditioning(_)) => {
                Some("lengthen simulate.tau_end so the fit window covers several drive periods")
            }
            CliError::Core(qsr_core::Error::Bracket(_)) => Some("widen the temperature range around the peak"),
            _ => None,
        }
    }
}

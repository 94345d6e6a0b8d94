use std::fmt;

use noisy_draws::Error;

/// Exit status for malformed input, flags or configs.
pub const EXIT_INPUT: u8 = 2;
/// Exit status for estimators that ran but could not produce a result.
pub const EXIT_ESTIMATOR: u8 = 3;
/// Exit status for simulations with excluded replications under `--strict`.
pub const EXIT_EXCLUDED: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn estimator(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_ESTIMATOR,
            message: message.into(),
        }
    }

    pub fn io(path: &std::path::Path, err: impl fmt::Display) -> Self {
        Self::input(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        match err {
            Error::BracketFailure { .. } | Error::NoInteriorMinimum { .. } | Error::NonFiniteTransform { .. } => {
                Self::estimator(err.to_string())
            }
            _ => Self::input(err.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;

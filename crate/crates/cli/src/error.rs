//! Exit-code mapping: 2 usage, 3 data, 4 numerical failure.

use xrdenoise_core::Error;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match &e {
            Error::InvalidK { .. } | Error::TooLarge { .. } => CliError::Usage(e.to_string()),
            Error::InvalidGrid(_)
            | Error::InvalidProfile(_)
            | Error::InvalidShape(_)
            | Error::InvalidSpec(_)
            | Error::InvalidConfig(_)
            | Error::NegativeIntensity { .. }
            | Error::BadCoefficients(_)
            | Error::UnsupportedShells { .. }
            | Error::DimensionMismatch { .. } => CliError::Data(e.to_string()),
            Error::SvdNoConvergence { .. }
            | Error::EigenNoConvergence { .. }
            | Error::RankDeficient { .. }
            | Error::IllConditioned { .. }
            | Error::ZeroPole
            | Error::ImaginaryResidualExceeded { .. }
            | Error::DegenerateDenominator
            | Error::ZeroSignal
            | Error::PerfectFilter
            | Error::NoTransition { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

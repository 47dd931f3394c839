use std::fmt;

use tqft::angles::AngleError;
use tqft::mesh::codec::CodecError;
use tqft::pachner::PachnerError;
use tqft::qdilog::QDilogError;
use tqft::quad::QuadError;
use tqft::state::StateError;
use tqft::wgz::WgzError;

/// Process exit codes.
pub mod exit {
    pub const IO: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const SEMANTIC: i32 = 3;
    pub const NOT_ADMISSIBLE: i32 = 4;
    pub const NUMERICAL: i32 = 5;
    pub const INVALID_SITE: i32 = 6;
    pub const INFEASIBLE_POSITIVITY: i32 = 7;
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        CliError { code, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(exit::USAGE, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(exit::IO, e.to_string())
    }
}

impl From<CodecError> for CliError {
    fn from(e: CodecError) -> Self {
        let code = match e {
            CodecError::Syntax { .. } => exit::USAGE,
            CodecError::Semantic(_) => exit::SEMANTIC,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<QDilogError> for CliError {
    fn from(e: QDilogError) -> Self {
        let code = match e {
            QDilogError::NonPositiveB(_) | QDilogError::HbarOutOfRange(_) => exit::USAGE,
            _ => exit::NUMERICAL,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<QuadError> for CliError {
    fn from(e: QuadError) -> Self {
        CliError::new(exit::NUMERICAL, e.to_string())
    }
}

impl From<StateError> for CliError {
    fn from(e: StateError) -> Self {
        let code = match &e {
            StateError::NonPositiveAngles { .. } | StateError::NotBalanced(_) | StateError::NotAdmissible(_) => {
                exit::NOT_ADMISSIBLE
            }
            StateError::DegenerateDeltaSystem { .. } | StateError::SingularDecayMap => exit::SEMANTIC,
            StateError::Dilog(d) => return d.clone().into(),
            StateError::NoDecay { .. } | StateError::Quadrature(_) | StateError::IllConditionedFit(_) => {
                exit::NUMERICAL
            }
        };
        CliError::new(code, e.to_string())
    }
}

impl From<AngleError> for CliError {
    fn from(e: AngleError) -> Self {
        let code = match e {
            AngleError::DimensionMismatch { .. } | AngleError::BadAngleSum { .. } | AngleError::UnknownEdge(_) => {
                exit::SEMANTIC
            }
            AngleError::Infeasible(_) | AngleError::UnboundedSlack | AngleError::EmptyAffineSpace => {
                exit::NOT_ADMISSIBLE
            }
            AngleError::NotConverged { .. } => exit::NUMERICAL,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<PachnerError> for CliError {
    fn from(e: PachnerError) -> Self {
        let code = match e {
            PachnerError::InvalidSite(_) => exit::INVALID_SITE,
            PachnerError::InfeasiblePositivity { .. } => exit::INFEASIBLE_POSITIVITY,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<WgzError> for CliError {
    fn from(e: WgzError) -> Self {
        match e {
            WgzError::InvalidParams(_) => CliError::usage(e.to_string()),
            WgzError::Dilog(d) => d.into(),
            _ => CliError::new(exit::NUMERICAL, e.to_string()),
        }
    }
}

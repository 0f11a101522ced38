//! Error type with the process exit-code contract:
//! 0 success, 2 configuration error, 3 numeric failure,
//! 4 verification failure (mapped in `main`, not an error here).

use lyapgibbs::kernel::KernelError;
use lyapgibbs::operator::OperatorError;
use lyapgibbs::quadrature::QuadratureError;
use lyapgibbs::reduction::ReductionError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config(message.into())
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        CliError::Numeric(message.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<ReductionError> for CliError {
    fn from(err: ReductionError) -> Self {
        CliError::Numeric(err.to_string())
    }
}

impl From<OperatorError> for CliError {
    fn from(err: OperatorError) -> Self {
        CliError::Numeric(err.to_string())
    }
}

impl From<QuadratureError> for CliError {
    fn from(err: QuadratureError) -> Self {
        match err {
            QuadratureError::OrderOutOfRange(_) => CliError::Config(err.to_string()),
            QuadratureError::NonFiniteIntegrand { .. } => CliError::Numeric(err.to_string()),
        }
    }
}

impl From<KernelError> for CliError {
    fn from(err: KernelError) -> Self {
        match err {
            KernelError::VariableSet { .. }
            | KernelError::NonFiniteParam { .. }
            | KernelError::NonPositiveBeta(_) => CliError::Config(err.to_string()),
            KernelError::RangeError { .. } | KernelError::Eval { .. } => {
                CliError::Numeric(err.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}

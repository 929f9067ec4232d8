use soap_core::SoapError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("unstable at lambda = {lambda}: lambda*E[X] = {load} >= 1")]
    Unstable { lambda: f64, load: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A reproduce row missed its tolerance.
    #[error("{0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Check(_) => 1,
            CliError::Config(_) => 2,
            CliError::Unstable { .. } => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<SoapError> for CliError {
    fn from(e: SoapError) -> Self {
        use SoapError::*;
        match e {
            InvalidDistribution(_) | LengthMismatch { .. } | UnknownPolicy(_) | MissingParam { .. }
            | InvalidPolicy(_) | UnknownOracle(_) | ConfigInvalid(_) | SizeOutOfSupport { .. } => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

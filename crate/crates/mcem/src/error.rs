#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("cap exceeded: {0}")]
    Cap(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Cap(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<mcem_core::spectral::SpectralError> for CliError {
    fn from(e: mcem_core::spectral::SpectralError) -> Self {
        use mcem_core::spectral::SpectralError as S;
        match e {
            S::TooLarge(_) => CliError::Cap(e.to_string()),
            S::Eigen(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<mcem_core::reachability::ReachError> for CliError {
    fn from(e: mcem_core::reachability::ReachError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<mcem_core::renormalization::RenormError> for CliError {
    fn from(e: mcem_core::renormalization::RenormError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<mcem_core::LatticeError> for CliError {
    fn from(e: mcem_core::LatticeError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<mcem_core::dynamics::DynamicsError> for CliError {
    fn from(e: mcem_core::dynamics::DynamicsError) -> Self {
        use mcem_core::dynamics::DynamicsError as D;
        match e {
            D::RegionTooLarge(_) => CliError::Cap(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

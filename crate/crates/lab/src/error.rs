use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    #[error("hypothesis failed: {0}")]
    Hypothesis(String),
    #[error("runtime failure: {0}")]
    Runtime(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl LabError {
    /// 1 for config and hypothesis errors, 2 for everything that broke while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::Hypothesis(_) => 1,
            LabError::Runtime(_) | LabError::Io(_) => 2,
        }
    }
}

impl From<kirchhoff_core::Error> for LabError {
    fn from(e: kirchhoff_core::Error) -> Self {
        use kirchhoff_core::Error as E;
        match e {
            E::Hypothesis(m) => LabError::Hypothesis(m),
            E::InvalidDomain(_) | E::InvalidParams(_) | E::Mismatch | E::Length { .. } => {
                LabError::Config(e.to_string())
            }
            E::NonFinite | E::NonConvergence { .. } => LabError::Runtime(e.to_string()),
        }
    }
}

pub type LabResult<T> = std::result::Result<T, LabError>;

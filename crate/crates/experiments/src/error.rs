use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExpError {
    #[error(transparent)]
    Core(#[from] penopt::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Format(String),
}

impl From<penopt::linalg::LinalgError> for ExpError {
    fn from(e: penopt::linalg::LinalgError) -> Self {
        ExpError::Core(e.into())
    }
}

impl From<toml::de::Error> for ExpError {
    fn from(e: toml::de::Error) -> Self {
        ExpError::Config(e.to_string())
    }
}

pub type Result<T, E = ExpError> = std::result::Result<T, E>;

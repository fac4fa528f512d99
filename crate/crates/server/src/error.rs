use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServerError {
    #[error(transparent)]
    Core(#[from] steer_core::Error),
    #[error(transparent)]
    Wire(#[from] steer_wire::WireError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("solver field {0:?} is missing")]
    MissingField(String),
    #[error("timing ledger has {deformations} deformation and {samples} solver samples; need at least 1 and 3")]
    InsufficientTimings { deformations: usize, samples: usize },
}

pub type Result<T> = std::result::Result<T, ServerError>;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("model file: {0}")]
    ModelFile(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("x = {x} is outside the tabulated range [0, {x_max}]")]
    OutOfRange { x: f64, x_max: f64 },
    #[error("scale table construction failed: {0}")]
    Construction(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown identity id `{id}`; valid ids: {valid}")]
    UnknownIdentity { id: String, valid: String },
    #[error("internal numerical error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

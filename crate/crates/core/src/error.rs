use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("referential integrity: {0}")]
    Reference(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("IoU undefined: both masks are empty")]
    UndefinedIou,

    #[error("degenerate design: {0}")]
    Design(String),

    #[error("singular design matrix: {0}")]
    SingularDesign(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("png: {0}")]
    Png(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn geometry(msg: impl Into<String>) -> Self {
        Error::InvalidGeometry(msg.into())
    }

    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

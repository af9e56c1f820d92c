use thiserror::Error;

/// Errors produced by the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("function sets are expressed in incompatible bases")]
    IncompatibleBasis,

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("ill-conditioned frame: reciprocal condition number {rcond:e} below {floor:e}")]
    IllConditioned { rcond: f64, floor: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("bootstrap replicate {index} failed: {source}")]
    Replicate {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Whether the error comes from the numerics rather than the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::SingularSystem(_) | Error::IllConditioned { .. } | Error::Numerical(_) => true,
            Error::Replicate { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

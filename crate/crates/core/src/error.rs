use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Factorization breakdown or a solve whose self-check failed.
    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("ill-posed configuration: {0}")]
    IllPosed(String),

    #[error(
        "coupled fixed-point iteration did not converge after {iterations} iterations \
         (last update {last_update:.3e}, tolerance {tolerance:.3e})"
    )]
    IterationFailure {
        iterations: usize,
        last_update: f64,
        tolerance: f64,
    },

    #[error("coarse window {window}: {source}")]
    Step {
        window: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn in_window(self, window: usize) -> Self {
        match self {
            e @ Error::Step { .. } => e,
            e => Error::Step {
                window,
                source: Box::new(e),
            },
        }
    }
}

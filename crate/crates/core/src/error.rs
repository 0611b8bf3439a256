use thiserror::Error;

/// Errors produced by the simulator and the estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("register size {0} is outside the supported range 1..=24")]
    Size(usize),

    #[error("qubit index error: {0}")]
    Index(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    Input(String),

    /// The resultant vector of a distribution vanished, so its argument is meaningless.
    #[error("circular mean is undefined (resultant length {0:.3e})")]
    UndefinedMean(f64),

    /// Rejection sampling kept fewer than two samples; the caller should redraw.
    #[error("rejection sampling accepted {0} samples, need at least 2")]
    DegenerateAcceptance(usize),

    #[error("serialization error: {0}")]
    Serde(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

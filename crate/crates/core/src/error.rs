use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure categories shared by every stage of the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated an operation's precondition (ranges, dimensions).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The physical setup cannot support the protocol (e.g. a degenerate driver).
    #[error("invalid configuration: {0}")]
    Configuration(String),

    /// An eigensolver, integrator or fit produced an unusable result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// One run of a sweep failed; `tau_ns` identifies which.
    #[error("sweep aborted at tau = {tau_ns} ns: {source}")]
    Sweep {
        tau_ns: f64,
        #[source]
        source: Box<Error>,
    },

    /// A pipeline stage failed; `stage` names it.
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub(crate) fn in_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |e| Error::Stage {
            stage,
            source: Box::new(e),
        }
    }

    /// The innermost error, looking through sweep and stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Sweep { source, .. } | Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

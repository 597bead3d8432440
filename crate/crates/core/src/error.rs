use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// The variants separate caller mistakes (`Argument`), calls made in the
/// wrong state (`State`), violated modelling preconditions (`Precondition`,
/// `Infeasible`) and problems with external inputs (`Config`, `Ingest`, `Io`).
#[derive(Debug, Error)]
pub enum CbaiError {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid state: {0}")]
    State(String),

    /// The best arm is not separated from `arm` under the configured
    /// uncertainties, so no procedure can identify it.
    #[error("best arm {best} is not separated from arm {arm}: {detail}")]
    Precondition {
        best: usize,
        arm: usize,
        detail: String,
    },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("ingestion error: {0}")]
    Ingest(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, CbaiError>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(CbaiError::Argument(msg.into()))
}

pub(crate) fn state<T>(msg: impl Into<String>) -> Result<T> {
    Err(CbaiError::State(msg.into()))
}

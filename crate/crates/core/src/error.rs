use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("basis mismatch: operator has dimension {operator}, wavepacket has {wavepacket}")]
    BasisMismatch { operator: usize, wavepacket: usize },

    #[error("wrong operator kind: expected {expected:?}, found {found:?}")]
    WrongOperator {
        expected: crate::rotor::OperatorKind,
        found: crate::rotor::OperatorKind,
    },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("basis did not converge: j_max would exceed {cap} (leak {leak:.3e} at j_max = {last_j_max})")]
    NonConvergence { cap: usize, last_j_max: usize, leak: f64 },

    #[error("no fit: {0}")]
    NoFit(String),

    #[error("missing data for plot: {0}")]
    MissingSeries(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<std::path::PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

use std::path::PathBuf;

use crate::circuits::GateKind;

pub type Result<T, E = GemError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum GemError {
    #[error("gate has no inverse: {0:?}")]
    NoInverse(GateKind),

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid noise model: {0}")]
    InvalidNoise(String),

    #[error("invalid calibration matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("{num_qubits} qubits exceeds the simulator limit of {max}")]
    TooManyQubits { num_qubits: usize, max: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl GemError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GemError::Io {
            path: path.into(),
            source,
        }
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {0} outside the supported range 1..={max}", max = crate::pauli::MAX_QUBITS)]
    QubitCount(usize),

    #[error("locality {k} out of range for {n} qubits")]
    Locality { n: usize, k: usize },

    #[error("matrix dimension {0} is not a power of two")]
    Dimension(usize),

    #[error("qubit count mismatch: {left} vs {right}")]
    QubitMismatch { left: usize, right: usize },

    #[error("invalid Pauli word {0:?}")]
    PauliParse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} requires {needed}, budget is {budget}")]
    Budget {
        what: &'static str,
        needed: f64,
        budget: f64,
    },

    #[error("Frobenius norm {target} is unreachable with {terms} coefficients bounded by 1")]
    UnreachableNorm { target: f64, terms: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("promise violated: {0}")]
    Promise(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

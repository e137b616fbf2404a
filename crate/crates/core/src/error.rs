use thiserror::Error;

use crate::ansatz::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("qubit {qubit} out of range for {n_qubits} qubits")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },

    #[error("{n_qubits} qubits exceeds the cap of {cap}")]
    TooManyQubits { n_qubits: usize, cap: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid layout: {}", format_violations(.0))]
    InvalidLayout(Vec<Violation>),

    #[error("unknown block id {0}")]
    UnknownBlock(usize),

    #[error("invalid differentiation target: {0}")]
    InvalidDiffSpec(String),

    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NonUnitary { deviation: f64 },

    #[error("qubit subset must be nonempty")]
    EmptySubset,

    #[error("parameter {index} of family {family} is not a Pauli rotation")]
    UnsupportedGateSlot { family: String, index: usize },

    #[error("expected {expected} parameters, found {found}")]
    ParamLength { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("power iteration did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}

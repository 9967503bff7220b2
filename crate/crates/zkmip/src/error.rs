use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1} qubits")]
    DimensionMismatch(usize, usize),
    #[error("qubit index {0} out of range for {1} qubits")]
    IndexOutOfRange(usize, usize),
    #[error("repeated qubit index {0}")]
    RepeatedIndex(usize),
    #[error("gate {0} is not supported here")]
    UnsupportedGate(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid code: {0}")]
    InvalidCode(String),
    #[error("subset of size {q} needs distance above {q}, code has distance {d}")]
    InsufficientDistance { q: usize, d: usize },
    #[error("simulation budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("capacity exceeded: {0}")]
    CapacityExceeded(String),
    #[error("gate {gate}: prover gate outside the prover phase ({msg})")]
    PhaseViolation { gate: usize, msg: String },
    #[error("gate {gate}: {msg}")]
    InvalidCircuit { gate: usize, msg: String },
    #[error("code is not order consistent with the requested gate")]
    NotOrderConsistent,
    #[error("format error: {0}")]
    Format(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

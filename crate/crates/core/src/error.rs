use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("all amplitudes vanish; cannot normalize")]
    ZeroVector,
    #[error("qubit {qubit} is out of range for a {n_qubits}-qubit state")]
    BadPartition { qubit: usize, n_qubits: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("qubit coverage error: {0}")]
    QubitCoverage(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("shape enumeration exceeds the cap of {cap} shapes")]
    BudgetTooLarge { cap: usize },
    #[error("optimization budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("numerically degenerate: {0}")]
    Degenerate(String),
    #[error("state does not have irreducible A|BCD form")]
    NotIrreducible,
    #[error("no reducibility witness available")]
    WitnessMissing,
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error("invalid ensemble: {0}")]
    BadEnsemble(String),
    #[error("degenerate polynomial: all coefficients vanish")]
    DegeneratePolynomial,
    #[error("malformed JSON input: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;

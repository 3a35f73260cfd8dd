use thiserror::Error;

/// Errors raised by operator construction and measurement computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("composite dimension too large: {dim} exceeds {max}")]
    CompositeTooLarge { dim: usize, max: usize },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("not Hermitian (relative deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("not unitary (deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("state vector not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("invalid density operator: {0}")]
    InvalidState(String),

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("conditioning on null event (probability {probability:e})")]
    NullEvent { probability: f64 },

    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("no outcome correspondence: {0}")]
    NoOutcomeCorrespondence(String),

    #[error("not an A-measurement (max violation {violation:e})")]
    NotAMeasurement { violation: f64 },

    #[error("instrument axioms violated: {0}")]
    AxiomFailure(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("index {index} out of range (< {bound})")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("grid size must be at least 2, got {0}")]
    GridTooSmall(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

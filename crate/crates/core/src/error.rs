use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("factor label `{0}` appears more than once")]
    LabelCollision(String),

    #[error("factor `{label}` has invalid dimension {dim}")]
    InvalidFactorDim { label: String, dim: usize },

    #[error("total dimension {dim} exceeds the limit {limit}")]
    DimensionLimit { dim: usize, limit: usize },

    #[error("unknown factor label `{0}`")]
    UnknownLabel(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operands live on different spaces: {left} vs {right}")]
    SpaceMismatch { left: String, right: String },

    #[error("expected a single-factor operator, got {0} factors")]
    NotSingleFactor(usize),

    #[error("state vector norm deviates from 1 by {0:e}")]
    NotNormalized(f64),

    #[error("operator is not Hermitian (residual {0:e})")]
    NotHermitian(f64),

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("mixture weights invalid: {0}")]
    InvalidWeights(String),

    #[error("invalid traced set: {0}")]
    InvalidTracedSet(String),

    #[error("superoperator materialization limited to dimension {limit}, got {dim}")]
    SuperoperatorTooLarge { dim: usize, limit: usize },

    #[error("basis is not orthonormal (residual {0:e})")]
    NonOrthonormal(f64),

    #[error("basis vector {index} is not an eigenvector of the observable (residual {residual:e})")]
    NotEigenvector { index: usize, residual: f64 },

    #[error("invalid pointer: {0}")]
    InvalidPointer(String),

    #[error("outcome map incomplete: {outcomes} outcomes for {vectors} basis vectors")]
    IncompleteOutcomes { outcomes: usize, vectors: usize },

    #[error("unknown pointer `{0}`")]
    UnknownPointer(String),

    #[error("pointer `{pointer}` has no outcome {outcome}")]
    UnknownOutcome { pointer: String, outcome: usize },

    #[error("event projectors do not commute (residual {0:e})")]
    NonCommutingEvents(f64),

    #[error("conditioning event has zero probability ({0:e})")]
    ZeroProbability(f64),

    #[error("chain has no completed measurement")]
    NoMeasurement,

    #[error("invalid bath: {0}")]
    InvalidBath(String),

    #[error("initial coherence is zero")]
    ZeroCoherence,

    #[error("couplings are not commensurate (all equal): {0:?}")]
    NonCommensurate(Vec<f64>),

    #[error("invalid time grid: {0}")]
    InvalidTimes(String),

    #[error("empty averaging window")]
    EmptyWindow,

    #[error("invalid density field: {0}")]
    InvalidField(String),

    #[error("partition of {coarse} cells per side is incompatible with resolution {resolution}")]
    IncompatiblePartition { resolution: usize, coarse: usize },

    #[error("resolution {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code associated with this error when surfaced by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::DimensionLimit { .. } => 3,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

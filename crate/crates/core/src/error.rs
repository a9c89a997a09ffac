use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid bipartition: {0}")]
    InvalidBipartition(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("register too large: {n} qubits exceeds the limit of {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("zero-norm state cannot be normalized")]
    ZeroNorm,

    #[error("step-size guard violated: {quantity} = {value:.4e} exceeds {limit}")]
    StepGuard {
        quantity: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("jump {index} produced a zero-norm state")]
    ZeroNormJump { index: usize },

    #[error("non-finite amplitudes at step {step}")]
    NonFinite { step: usize },

    #[error("trajectory {index} failed: {source}")]
    TrajectoryFailed {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("trajectory records do not share a time grid")]
    MismatchedGrids,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

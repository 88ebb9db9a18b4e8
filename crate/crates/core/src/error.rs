use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("register `{0}` appears in both operands")]
    RegisterCollision(String),
    #[error("duplicate register name `{0}`")]
    DuplicateRegister(String),
    #[error("no register named `{0}`")]
    UnknownRegister(String),
    #[error("register `{name}` has dimension {dim}, must be at least 2")]
    BadRegisterDimension { name: String, dim: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("digit {digit} out of range for register of dimension {dim}")]
    DigitOutOfRange { digit: usize, dim: usize },
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("state has zero total probability")]
    ZeroProbability,
    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("operator is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
    #[error("map is not a permutation of basis states")]
    NotPermutation,
    #[error("density matrix invalid: {0}")]
    InvalidDensity(String),
    #[error("invalid ensemble weights: {0}")]
    InvalidWeights(String),
    #[error("probability {name} = {value} outside [0, 1]")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },
    #[error("pair value 11 does not encode a qutrit digit")]
    InvalidEncoding,
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("security threshold chi = {0} must exceed the LHV bound 2")]
    ChiTooLow(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

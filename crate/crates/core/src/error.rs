use num_bigint::BigUint;
use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("index {index} out of range 0..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("vector weight is below 1")]
    WeightDeficient,

    #[error("vector weight is not exactly 1")]
    WeightNotOne,

    #[error("k = {0} is too small for the construction (need k >= 16)")]
    KTooSmall(usize),

    #[error("no index r in [s+l, k] reaches prefix weight 2^-l")]
    ThresholdUnreachable,

    #[error("materialization needs {required} vertices, cap is {cap}")]
    CapExceeded { required: BigUint, cap: BigUint },

    #[error("tree is not a (k,d)-tree: {0}")]
    NotAKdTree(String),

    #[error("leaf at depth {depth} is shallower than k = {k}")]
    LeafTooShallow { depth: usize, k: usize },

    #[error("budget exhausted after {used} units")]
    BudgetExhausted { used: u64 },

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("no certificate found for k = {0}")]
    CertificateNotFound(usize),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("plan rejected: {0}")]
    PlanRejected(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

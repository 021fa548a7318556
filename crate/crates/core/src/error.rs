use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("precision of {0} digits is below the minimum of 30")]
    InvalidPrecision(u32),

    #[error("requested tolerance 1e-{requested} exceeds achievable accuracy at {available} digits")]
    PrecisionUnderflow { requested: u32, available: u32 },

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector is not normalized (norm deviates by {0:e})")]
    NotNormalized(f64),

    #[error("vector is in the {0} basis; this operation needs the standard basis")]
    WrongBasis(&'static str),

    #[error("matrix is not invertible modulo {modulus}")]
    NotInvertible { modulus: u64 },

    #[error("even dimension {0} is not supported by the Weil representation")]
    EvenDimension(u64),

    #[error("{value} is not coprime to {modulus}")]
    NotCoprime { value: i64, modulus: u64 },

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("{0} is not square-free")]
    NotSquareFree(u64),

    #[error("dimension {0} is degenerate for the magical formula ((d+1)(d-3) must be positive)")]
    DegenerateDimension(u64),

    #[error("dimension {0} is not of the form n^2+3")]
    NotOfForm(u64),

    #[error("invalid frame: {0}")]
    InvalidSpec(String),

    #[error("{what} residual {residual:e} exceeds threshold {threshold:e}")]
    ResidualTooLarge {
        what: &'static str,
        residual: f64,
        threshold: f64,
    },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("pipeline stage `{stage}` failed: {message}")]
    Stage { stage: &'static str, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

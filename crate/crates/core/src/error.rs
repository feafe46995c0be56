use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max |A - A^H| = {0:e})")]
    NotHermitian(f64),

    #[error("trace {0} is not 1")]
    TraceNotUnit(f64),

    #[error("eigenvalue {0:e} is negative beyond tolerance")]
    NegativeEigenvalue(f64),

    #[error("spectrum sums to {0}, expected 1")]
    SpectrumNotNormalized(f64),

    #[error("{name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("{0} must be finite")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("photon number mismatch: argument {given}, angles built for {angles}")]
    PhotonNumberMismatch { given: u32, angles: u32 },

    #[error("measurement outcome {outcome} has vanishing probability {probability:e}")]
    VanishingProbability { outcome: u8, probability: f64 },

    #[error("invalid sample grid: {0}")]
    InvalidGrid(String),

    #[error("signal too short: {0}")]
    InsufficientSpan(String),
}

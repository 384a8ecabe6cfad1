use thiserror::Error;

/// Errors raised by the tensor, spectral and subdifferential routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("mode {mode} out of range for a {order}-mode tensor (modes are 1-based)")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("non-finite entry at offset {0}")]
    NonFinite(usize),

    #[error("tensor is not cubic: shape {0:?}")]
    NotCubic(Vec<usize>),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("SVD did not converge after {sweeps} sweeps (residual {residual:e})")]
    SvdNoConvergence { sweeps: usize, residual: f64 },

    #[error("factor for mode {mode} does not have orthonormal columns (deviation {deviation:e})")]
    NonOrthonormal { mode: usize, deviation: f64 },

    #[error("weight {index} is not positive ({value})")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("rank {rank} exceeds the smallest mode size {max}")]
    RankTooLarge { rank: usize, max: usize },

    #[error("decomposition has no positive weight")]
    EmptyDecomposition,

    #[error("negative entry {value} at position {index}")]
    NegativeEntry { index: usize, value: f64 },

    #[error("frame for mode {mode} is not orthogonal (deviation {deviation:e})")]
    NonOrthogonalFrame { mode: usize, deviation: f64 },

    #[error("invalid block partition: {0}")]
    InvalidPartition(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{field}: {message}")]
    Format { field: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

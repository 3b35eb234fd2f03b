use thiserror::Error;

use crate::svd::PartialSvd;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type. Variants map one-to-one onto the failure modes of
/// the numerical pipeline so callers can react to individual stages.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid angular grid: {0}")]
    InvalidGrid(String),

    #[error("invalid intensity profile: {0}")]
    InvalidProfile(String),

    #[error("invalid Hankel shape: {0}")]
    InvalidShape(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid order K={requested}, admissible maximum {max}")]
    InvalidK { requested: usize, max: usize },

    #[error("Lanczos SVD did not converge after {iterations} iterations")]
    SvdNoConvergence {
        iterations: usize,
        /// Best triplets available when iteration stopped.
        partial: Box<PartialSvd>,
    },

    #[error("eigenvalue iteration did not converge after {iterations} sweeps")]
    EigenNoConvergence { iterations: usize },

    #[error("matrix dimension {dim} exceeds supported maximum {max}")]
    TooLarge { dim: usize, max: usize },

    #[error("rank-deficient system (condition estimate {condition:.3e})")]
    RankDeficient { condition: f64 },

    #[error("ill-conditioned system (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("zero pole has no damping/frequency representation")]
    ZeroPole,

    #[error("imaginary residual {residual:.3e} exceeds tolerance {tol:.3e}; estimate is not conjugate-closed")]
    ImaginaryResidualExceeded { residual: f64, tol: f64 },

    #[error("degenerate strain denominator")]
    DegenerateDenominator,

    #[error("unsupported shell count {shells} (maximum {max})")]
    UnsupportedShells { shells: u32, max: u32 },

    #[error("bad form-factor coefficients: {0}")]
    BadCoefficients(String),

    #[error("negative intensity at sample {index}")]
    NegativeIntensity { index: usize },

    #[error("signal is identically zero")]
    ZeroSignal,

    #[error("filtered profile equals the reference profile; performance measure undefined")]
    PerfectFilter,

    #[error("no singular-value transition found (largest gap {largest_gap:.3} decades, required {min_gap:.3})")]
    NoTransition { largest_gap: f64, min_gap: f64 },

    #[error("invalid sample specification: {0}")]
    InvalidSpec(String),

    #[error("invalid bench configuration: {0}")]
    InvalidConfig(String),
}

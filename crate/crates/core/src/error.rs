use thiserror::Error;

use crate::io::matrix_market::MatrixMarketError;

/// Errors produced by the library.
///
/// Eigen-indices carried by variants are 0-based; the `Display` output
/// reports them 1-based, matching the report and CSV formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {context} (expected {expected}, found {found})")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("vector {} has length {found}, expected {expected}", .index + 1)]
    VectorLength {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("matrix must have dimension n >= 1")]
    EmptyMatrix,

    #[error("non-finite value at ({}, {})", .row + 1, .col + 1)]
    NonFinite { row: usize, col: usize },

    #[error(
        "basis is not orthonormal: <e_{}, e_{}> = {value} (deviation {deviation:e})",
        .m + 1, .n + 1
    )]
    NotOrthonormal {
        m: usize,
        n: usize,
        value: f64,
        deviation: f64,
    },

    #[error("not an eigenbasis: residual of vector {} is {residual:e}", .index + 1)]
    NotAnEigenbasis { index: usize, residual: f64 },

    #[error(
        "degenerate base spectrum: eigenvalues {} and {} differ by {gap:e}",
        .i + 1, .k + 1
    )]
    DegenerateBaseSpectrum { i: usize, k: usize, gap: f64 },

    #[error("non-finite series coefficient b[{}][{}][{r}]", .i + 1, .k + 1)]
    NonFiniteCoefficient { i: usize, k: usize, r: usize },

    #[error("eigenvector {} evaluated to a zero or non-finite vector", .index + 1)]
    ZeroVector { index: usize },

    #[error("order {order} too small for a radius window of {window} (need order >= window + 2)")]
    InsufficientOrder { order: usize, window: usize },

    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("ambiguous eigenvector matching: minimum overlap {min_overlap}")]
    AmbiguousMatch { min_overlap: f64 },

    #[error("Gram-Schmidt pivot {pivot:e} for vector {} signals basis collapse", .index + 1)]
    ReorthonormalizationFailure { index: usize, pivot: f64 },

    #[error("continuation stalled at theta = {theta}: step {step:e} below minimum")]
    Stall { theta: f64, step: f64 },

    #[error("stage {stage}: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    MatrixMarket(#[from] MatrixMarketError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Strips any number of `Stage` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

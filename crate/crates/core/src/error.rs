use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("matrix is defective: eigenvector condition number {condition:.3e} exceeds {threshold:.1e}")]
    Defective { condition: f64, threshold: f64 },
    #[error("no eigenvalue within stationarity tolerance {tolerance:.3e}")]
    NoStationaryState { tolerance: f64 },
    #[error("degenerate stationary subspace: eigenvalues {eigenvalues:?}")]
    DegenerateStationary { eigenvalues: Vec<Complex64> },
    #[error("step doubling did not converge: relative change {change:.3e} (coarse {coarse} steps, fine {fine} steps)")]
    StepDoubling { change: f64, coarse: usize, fine: usize },
    #[error("eigenvalue branch collision at {value}: nearest competitor {competitor} (gap {gap:.3e})")]
    BranchCollision { value: Complex64, competitor: Complex64, gap: f64 },
    #[error("near-degenerate eigenvalues: separation {separation:.3e}")]
    NearDegenerate { separation: f64 },
    #[error("singular transient block: smallest singular value {smallest:.3e}")]
    SingularBlock { smallest: f64 },
    #[error("degenerate root: {0}")]
    DegenerateRoot(String),
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("window overflow: estimated support {needed} exceeds grid {grid}; use N >= {suggested}")]
    WindowOverflow { needed: usize, grid: usize, suggested: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name: name.to_string(), reason: reason.into() }
}

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("boundary sets must carry n = {n} conditions in total (got {got})")]
    Unbalanced { got: usize, n: usize },

    #[error("derivative order q = {q} out of range for n = {n}")]
    QOutOfRange { q: usize, n: usize },

    #[error("operator order must be at least 2 (got {0})")]
    OrderTooSmall(usize),

    #[error("degenerate auxiliary space: {0}")]
    DegenerateSpace(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("property (N_a) fails for the given boundary conditions")]
    NaViolated,

    #[error("M = {m} is an eigenvalue of the space (scaled determinant {det:.3e})")]
    EigenvalueCollision { m: f64, det: f64 },

    #[error("no eigenvalue found: no sign change of the characteristic determinant for m in (0, {m_max}] with {scan_points} scan points")]
    EigenvalueNotFound { m_max: f64, scan_points: usize },

    #[error("evaluation at t = s with q = n-1 requires an explicit side")]
    DiagonalSide,

    #[error("numerical consistency: {0}")]
    Numerical(String),

    #[error("validation: {0}")]
    Validation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

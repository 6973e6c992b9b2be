use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("Gram matrix is not positive definite (min/max eigenvalue ratio {0:.3e})")]
    NotPositiveDefinite(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("linear map is rank deficient (rank {rank}, need {needed})")]
    RankDeficient { rank: usize, needed: usize },
    #[error("invalid filtration: {0}")]
    InvalidFiltration(String),
    #[error("degenerate filtration basis: {0}")]
    DegenerateBasis(String),
    #[error("dimension cap exceeded: {what} = {value} > {cap}")]
    CapExceeded { what: String, value: usize, cap: usize },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("fiberwise positivity violated at u = {u:.6}, x = {x:?} (min eigenvalue {min_eig:.3e})")]
    Positivity { u: f64, x: Vec<f64>, min_eig: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

use mwcov_core::CoreError;

#[derive(Debug, thiserror::Error)]
pub enum EstError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("sample covariance is not positive semidefinite (min eigenvalue below {0:e})")]
    NotPsd(f64),
    #[error("iterate left the positive definite cone at every tried step")]
    LostDefiniteness,
    #[error("line search failed after {0} halvings")]
    LineSearch(usize),
    #[error("factor diagonal collapsed below {0:e}")]
    DiagonalCollapse(f64),
    #[error("singular value decomposition failed")]
    Svd,
    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type Result<T> = std::result::Result<T, EstError>;

use mwcov_core::CoreError;

#[derive(Debug, thiserror::Error)]
pub enum GenError {
    #[error("invalid process spec: {0}")]
    InvalidSpec(String),
    #[error("operator is singular or the solve did not converge (residual {0:e})")]
    Solve(f64),
    #[error("{rows} rows exceeds the explicit precision cap {cap}")]
    TooLarge { rows: usize, cap: usize },
    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type Result<T> = std::result::Result<T, GenError>;

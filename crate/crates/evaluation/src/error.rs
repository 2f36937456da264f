use mwcov_core::CoreError;
use mwcov_estimators::EstError;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("reference matrix has zero Frobenius norm")]
    ZeroTruth,
    #[error("ground truth has zero range")]
    ConstantTruth,
    #[error("conditional block is singular or not positive definite")]
    Singular,
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Estimator(#[from] EstError),
}

pub type Result<T> = std::result::Result<T, EvalError>;

use mwcov_core::CoreError;
use mwcov_estimators::EstError;
use mwcov_evaluation::EvalError;
use mwcov_generators::GenError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid experiment: {0}")]
    Spec(String),
    #[error("{0}")]
    Censored(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Generator(#[from] GenError),
    #[error(transparent)]
    Estimator(#[from] EstError),
    #[error(transparent)]
    Evaluation(#[from] EvalError),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

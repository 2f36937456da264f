//! Scoring of fitted covariance/precision models: Frobenius error, support
//! recovery, and forecasting from a fitted precision.

pub mod error;
pub mod indlasso;
pub mod metrics;
pub mod predict;
pub mod support;

pub use error::{EvalError, Result};
pub use indlasso::{lasso_cd, lasso_kkt, lasso_objective, IndLasso};
pub use metrics::{frob_error, frob_error_columns, frob_error_model, mean_nrmse, nrmse, LOG_ERROR_FLOOR};
pub use predict::{forward_predict, to_frame_major, FrameOrder, PredictorBlocks};
pub use support::{confusion, extract_support, mcc, Confusion, Mcc, SupportPattern, DEFAULT_SUPPORT_THRESHOLD};

//! Estimators of Kronecker-structured covariance and precision matrices for
//! multiway data, plus a dense graphical lasso baseline.
//!
//! | method | model |
//! |---|---|
//! | [`glasso`] | dense precision |
//! | [`kp_ls`] | covariance `A ⊗ B` |
//! | [`kpca`] | covariance `Σ_l A_l ⊗ B_l` |
//! | [`tlasso`] | precision `⊗_k Ω_k` |
//! | [`teralasso`] | precision `⊕_k Ψ_k` |
//! | [`sg_palm`] | precision `(⊕_k A_k)²` |

mod common;
pub mod config;
pub mod error;
pub mod glasso;
pub mod kronpca;
pub mod objective;
pub mod rates;
pub mod result;
pub mod sgpalm;
pub mod stats;
pub mod teralasso;
pub mod tlasso;

pub use config::{EstimatorConfig, Init, Method};
pub use error::{EstError, Result};
pub use glasso::{glasso, glasso_objective, glasso_solve, kkt_residual, GlassoOutput, GlassoParams};
pub use kronpca::{kp_ls, kp_ls_factors, kpca, kpca_terms};
pub use objective::{objective, sg_palm_objective, teralasso_objective, tlasso_objective};
pub use rates::lambda_from_rate;
pub use result::{is_nonincreasing, FitResult, KronTerms, Model};
pub use sgpalm::{sg_palm, sg_palm_gradient, sg_palm_smooth};
pub use stats::SampleStats;
pub use teralasso::{balance_traces, teralasso, teralasso_gradient, teralasso_smooth};
pub use tlasso::tlasso;

/// Fits `method` to the statistics. Two-mode statistics `[d2, d1]` are
/// required for KP-LS, KPCA (rank capped by `max_rank`) and a dense `S`
/// is formed for glasso.
pub fn fit(method: Method, stats: &SampleStats, cfg: &EstimatorConfig, max_rank: Option<usize>) -> Result<FitResult> {
    match method {
        Method::Glasso => {
            let lambdas = cfg.lambdas(1)?;
            glasso(&stats.covariance(usize::MAX)?, lambdas[0], cfg)
        }
        Method::KpLs => kp_ls(stats),
        Method::Kpca => kpca(stats, cfg.lambdas(1)?[0], max_rank),
        Method::Tlasso => tlasso(stats, cfg),
        Method::TeraLasso => teralasso(stats, cfg),
        Method::SgPalm => sg_palm(stats, cfg),
    }
}

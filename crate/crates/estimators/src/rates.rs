//! Penalty schedules scaled by the statistical rate of each estimator.

use crate::config::Method;
use crate::error::{EstError, Result};

/// Per-mode penalties `λ_k` for sample size `n` and constant `c`.
///
/// * SG-PALM: `c sqrt(d_k log d / N)`
/// * TeraLasso: `c sqrt(log d / (N Π_{i≠k} d_i))`
/// * Tlasso: `c sqrt(log d_k / (N d))`
/// * Glasso: `c sqrt(log d / N)`, a single value
/// * KP-LS and KPCA: `c` itself (their penalty is not rate-scaled)
pub fn lambda_from_rate(method: Method, dims: &[usize], n: usize, c: f64) -> Result<Vec<f64>> {
    if n == 0 || dims.is_empty() || dims.contains(&0) {
        return Err(EstError::Config(format!("need N >= 1 and positive dims, got N={n}, dims {dims:?}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(EstError::Config(format!("rate constant {c} must be positive")));
    }
    let nf = n as f64;
    let d: f64 = dims.iter().map(|&x| x as f64).product();
    Ok(match method {
        Method::SgPalm => dims.iter().map(|&dk| c * (dk as f64 * d.ln() / nf).sqrt()).collect(),
        Method::TeraLasso => dims.iter().map(|&dk| c * (d.ln() / (nf * d / dk as f64)).sqrt()).collect(),
        Method::Tlasso => dims.iter().map(|&dk| c * ((dk as f64).ln() / (nf * d)).sqrt()).collect(),
        Method::Glasso => vec![c * (d.ln() / nf).sqrt()],
        Method::KpLs | Method::Kpca => vec![c],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_dims_give_zero() {
        for m in [Method::SgPalm, Method::TeraLasso, Method::Tlasso, Method::Glasso] {
            assert!(lambda_from_rate(m, &[1, 1], 1, 1.0).unwrap().iter().all(|&l| l == 0.0));
        }
        assert!(lambda_from_rate(Method::Glasso, &[2], 0, 1.0).is_err());
        assert!(lambda_from_rate(Method::Glasso, &[2], 3, 0.0).is_err());
    }
}

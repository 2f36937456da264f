//! Off-diagonal sparsity patterns and the Matthews correlation between them.

use std::collections::BTreeSet;

use mwcov_core::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};

/// Default magnitude above which an estimated entry counts as nonzero.
pub const DEFAULT_SUPPORT_THRESHOLD: f64 = 1e-6;

/// Symmetric set of off-diagonal nonzero positions. Both `(i, j)` and
/// `(j, i)` are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportPattern {
    pub dim: usize,
    pub offdiag_nonzeros: BTreeSet<(usize, usize)>,
    pub threshold: f64,
}

impl SupportPattern {
    /// Pattern from unordered pairs; the diagonal is dropped.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (usize, usize)>, threshold: f64) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (i, j) in pairs {
            if i >= dim || j >= dim {
                return Err(EvalError::Dimension(format!("pair ({i},{j}) outside dim {dim}")));
            }
            if i != j {
                set.insert((i, j));
                set.insert((j, i));
            }
        }
        Ok(Self {
            dim,
            offdiag_nonzeros: set,
            threshold,
        })
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.offdiag_nonzeros.contains(&(i, j))
    }

    /// Number of unordered nonzero pairs.
    pub fn edge_count(&self) -> usize {
        self.offdiag_nonzeros.len() / 2
    }
}

/// Off-diagonal entries with `|m_ij| > threshold`, symmetrized by union.
pub fn extract_support(m: &DMatrix<f64>, threshold: f64) -> Result<SupportPattern> {
    if m.nrows() != m.ncols() {
        return Err(EvalError::Dimension(format!("{}x{} is not square", m.nrows(), m.ncols())));
    }
    let n = m.nrows();
    let pairs = (0..n).flat_map(|j| (0..n).map(move |i| (i, j))).filter(|&(i, j)| i != j && m[(i, j)].abs() > threshold);
    SupportPattern::from_pairs(n, pairs.collect::<Vec<_>>(), threshold)
}

/// Pair-counted confusion matrix of an estimated against a true pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mcc {
    pub value: f64,
    /// Set when a marginal is empty and the value was defined as 0.
    pub degenerate: bool,
    pub confusion: Confusion,
}

impl Confusion {
    pub fn mcc(&self) -> Mcc {
        let (tp, tn, fp, fn_) = (self.tp as f64, self.tn as f64, self.fp as f64, self.fn_ as f64);
        let den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
        if den == 0.0 {
            return Mcc {
                value: 0.0,
                degenerate: true,
                confusion: *self,
            };
        }
        Mcc {
            value: ((tp * tn - fp * fn_) / den.sqrt()).clamp(-1.0, 1.0),
            degenerate: false,
            confusion: *self,
        }
    }
}

/// Classification of the unordered off-diagonal pairs `i < j`.
pub fn confusion(est: &SupportPattern, truth: &SupportPattern) -> Result<Confusion> {
    if est.dim != truth.dim {
        return Err(EvalError::Dimension(format!("support dims {} vs {}", est.dim, truth.dim)));
    }
    let n = est.dim as u64;
    let total = n * n.saturating_sub(1) / 2;
    let upper = |s: &SupportPattern| -> BTreeSet<(usize, usize)> { s.offdiag_nonzeros.iter().copied().filter(|(i, j)| i < j).collect() };
    let (e, t) = (upper(est), upper(truth));
    let tp = e.intersection(&t).count() as u64;
    let fp = e.len() as u64 - tp;
    let fn_ = t.len() as u64 - tp;
    Ok(Confusion {
        tp,
        fp,
        fn_,
        tn: total - tp - fp - fn_,
    })
}

pub fn mcc(est: &SupportPattern, truth: &SupportPattern) -> Result<Mcc> {
    Ok(confusion(est, truth)?.mcc())
}

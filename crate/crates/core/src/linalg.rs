//! Small dense helpers shared by the structured types and the estimators.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

use crate::error::{CoreError, Result};

/// Relative tolerance for accepting a matrix as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Dense Kronecker product `a ⊗ b`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// `m_1 ⊗ m_2 ⊗ ... ⊗ m_n` in the order given.
pub fn kron_all(ms: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let mut acc = DMatrix::from_element(1, 1, 1.0);
    for m in ms {
        acc = acc.kronecker(*m);
    }
    acc
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `max |m_ij - m_ji| / max(1, max |m_ij|)`.
pub fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let scale = m.amax().max(1.0);
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..j {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

pub fn check_square(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(CoreError::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

pub fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(CoreError::NonFinite)
    }
}

/// Symmetric eigendecomposition with finiteness check.
pub fn sym_eigen(m: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    check_finite(m)?;
    let e = SymmetricEigen::new(symmetrize(m));
    if e.eigenvalues.iter().all(|x| x.is_finite()) {
        Ok(e)
    } else {
        Err(CoreError::NonFinite)
    }
}

/// Principal square root of a symmetric PSD matrix. Eigenvalues are
/// clamped at zero; anything below `-1e-10 * max(1, |λ|_max)` is an error.
pub fn sym_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let e = sym_eigen(m)?;
    let scale = e.eigenvalues.amax().max(1.0);
    let min = e.eigenvalues.min();
    if min < -1e-10 * scale {
        return Err(CoreError::NotPsd(min));
    }
    let d = e.eigenvalues.map(|x| x.max(0.0).sqrt());
    Ok(&e.eigenvectors * DMatrix::from_diagonal(&d) * e.eigenvectors.transpose())
}

/// `log det` of a symmetric positive definite matrix via Cholesky.
pub fn logdet_spd(m: &DMatrix<f64>) -> Result<f64> {
    let chol = Cholesky::new(symmetrize(m)).ok_or(CoreError::NotPositiveDefinite)?;
    Ok(chol.l().diagonal().iter().map(|x| 2.0 * x.ln()).sum())
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn inv_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = Cholesky::new(symmetrize(m)).ok_or(CoreError::NotPositiveDefinite)?;
    Ok(symmetrize(&chol.inverse()))
}

/// Frobenius inner product `<a, b> = tr(a^T b)`.
pub fn frob_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Sum of absolute off-diagonal entries.
pub fn l1_offdiag(m: &DMatrix<f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if i != j {
                s += m[(i, j)].abs();
            }
        }
    }
    s
}

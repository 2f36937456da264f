//! One-dimensional finite-difference building blocks and sparse Kronecker
//! assembly.

use nalgebra::DMatrix;
use sprs::{CsMat, TriMat};

use crate::error::{GenError, Result};

fn check_size(n: usize) -> Result<()> {
    if n == 0 {
        return Err(GenError::InvalidSpec("operator size must be at least 1".into()));
    }
    Ok(())
}

/// Tridiagonal `A_n`: 2 on the diagonal, -1 on both off-diagonals.
pub fn laplacian_1d(n: usize) -> Result<DMatrix<f64>> {
    check_size(n)?;
    Ok(DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => 2.0,
        1 => -1.0,
        _ => 0.0,
    }))
}

/// Lower-bidiagonal backward difference: unit diagonal, -1 below it.
pub fn difference_1d(n: usize) -> Result<DMatrix<f64>> {
    check_size(n)?;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else if i == j + 1 {
            -1.0
        } else {
            0.0
        }
    }))
}

/// Upper-bidiagonal `B`: unit diagonal, `-a` above it.
pub fn ar1_bidiagonal(t: usize, a: f64) -> Result<DMatrix<f64>> {
    check_size(t)?;
    if !(a.abs() < 1.0) {
        return Err(GenError::InvalidSpec(format!("AR coefficient |a| = {} must be < 1", a.abs())));
    }
    Ok(DMatrix::from_fn(t, t, |i, j| {
        if i == j {
            1.0
        } else if j == i + 1 {
            -a
        } else {
            0.0
        }
    }))
}

/// Sum of scaled Kronecker products of small dense factors, assembled
/// directly in sparse form. Each term lists its factors left to right, so the
/// first factor owns the slowest index.
pub(crate) fn sparse_kron_terms(side: usize, terms: &[(f64, Vec<&DMatrix<f64>>)]) -> CsMat<f64> {
    let mut tri = TriMat::new((side, side));
    for (coef, factors) in terms {
        if *coef == 0.0 {
            continue;
        }
        let mut acc = vec![(0usize, 0usize, *coef)];
        for f in factors {
            let n = f.nrows();
            let nz: Vec<(usize, usize, f64)> = f
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(idx, v)| (idx % n, idx / n, *v))
                .collect();
            let mut next = Vec::with_capacity(acc.len() * nz.len());
            for &(r, c, v) in &acc {
                for &(i, j, w) in &nz {
                    next.push((r * n + i, c * n + j, v * w));
                }
            }
            acc = next;
        }
        for (r, c, v) in acc {
            tri.add_triplet(r, c, v);
        }
    }
    prune(tri.to_csr())
}

/// Drops explicitly stored zeros left behind by cancellation.
pub(crate) fn prune(m: CsMat<f64>) -> CsMat<f64> {
    let mut tri = TriMat::new(m.shape());
    for (v, (i, j)) in m.iter() {
        if *v != 0.0 {
            tri.add_triplet(i, j, *v);
        }
    }
    tri.to_csr()
}

pub(crate) fn sparse_matvec(m: &CsMat<f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; m.rows()];
    if m.is_csr() {
        for (i, row) in m.outer_iterator().enumerate() {
            y[i] = row.iter().map(|(j, v)| v * x[j]).sum();
        }
    } else {
        for (j, col) in m.outer_iterator().enumerate() {
            for (i, v) in col.iter() {
                y[i] += v * x[j];
            }
        }
    }
    y
}

pub fn to_dense(m: &CsMat<f64>) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.rows(), m.cols());
    for (v, (i, j)) in m.iter() {
        d[(i, j)] += *v;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        assert_eq!(laplacian_1d(1).unwrap(), DMatrix::from_element(1, 1, 2.0));
        assert_eq!(
            laplacian_1d(3).unwrap(),
            DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0])
        );
        assert_eq!(difference_1d(1).unwrap(), DMatrix::from_element(1, 1, 1.0));
        assert_eq!(
            difference_1d(3).unwrap(),
            DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, -1.0, 1.0])
        );
        assert_eq!(ar1_bidiagonal(4, 0.0).unwrap(), DMatrix::identity(4, 4));
        assert_eq!(
            ar1_bidiagonal(3, -0.5).unwrap(),
            DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, 0.0, 1.0, 0.5, 0.0, 0.0, 1.0])
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert!(laplacian_1d(0).is_err());
        assert!(difference_1d(0).is_err());
        assert!(ar1_bidiagonal(3, 1.0).is_err());
        assert!(ar1_bidiagonal(3, -1.5).is_err());
        assert!(ar1_bidiagonal(3, f64::NAN).is_err());
    }

    #[test]
    fn telescoping_difference() {
        let d = difference_1d(4).unwrap();
        let ones = nalgebra::DVector::from_element(4, 1.0);
        assert_eq!(d * ones, nalgebra::DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn sparse_kron_matches_dense() {
        let a = laplacian_1d(2).unwrap();
        let b = difference_1d(3).unwrap();
        let i2 = DMatrix::identity(2, 2);
        let s = sparse_kron_terms(6, &[(1.5, vec![&a, &b]), (-1.0, vec![&i2, &b])]);
        let want = a.kronecker(&b) * 1.5 - i2.kronecker(&b);
        assert!((to_dense(&s) - &want).amax() < 1e-15);
        let x: Vec<f64> = (0..6).map(|i| i as f64 - 2.5).collect();
        let y = sparse_matvec(&s, &x);
        let yd = &want * nalgebra::DVector::from_vec(x);
        assert!(y.iter().zip(yd.iter()).all(|(p, q)| (p - q).abs() < 1e-14));
    }

    #[test]
    fn cancelled_entries_are_pruned() {
        let i1 = DMatrix::identity(1, 1);
        let s = sparse_kron_terms(1, &[(1.0, vec![&i1]), (-1.0, vec![&i1])]);
        assert_eq!(s.nnz(), 0);
    }
}

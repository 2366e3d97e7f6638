//! Thin dense helpers over nalgebra for the small systems the solver needs.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

/// Solves `a x = b` by LU with partial pivoting. `None` if `a` is singular.
pub(crate) fn solve(a: DMatrix<f64>, b: DVector<f64>) -> Option<Vec<f64>> {
    let x = a.lu().solve(&b)?;
    x.iter().all(|v| v.is_finite()).then(|| x.iter().copied().collect())
}

/// Smallest eigenvalue of a symmetric matrix.
pub(crate) fn min_eigenvalue(a: DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    a.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

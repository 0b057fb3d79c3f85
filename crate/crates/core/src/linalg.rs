//! Small dense linear-algebra helpers shared by the solvers.
//!
//! Everything here is desk-scale: direct factorizations on matrices of a
//! few dozen rows, no sparsity, no blocking.

use nalgebra::{DMatrix, DVector};

/// Kronecker product A ⊗ B.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Column-major vectorization of a matrix.
pub fn vec_of(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_of`]: reshape a column vector into an r×c matrix.
pub fn unvec(v: &DVector<f64>, rows: usize, cols: usize) -> DMatrix<f64> {
    debug_assert_eq!(v.len(), rows * cols);
    DMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// Largest eigenvalue of a symmetric matrix (input symmetrized first;
/// −∞ for 0×0, so empty blocks pass "⪯ 0" checks vacuously).
pub fn max_eig_sym(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).fold(f64::NEG_INFINITY, f64::max)
}

/// Smallest eigenvalue of a symmetric matrix (+∞ for 0×0).
pub fn min_eig_sym(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).fold(f64::INFINITY, f64::min)
}

fn sym_eigenvalues(m: &DMatrix<f64>) -> impl Iterator<Item = f64> {
    debug_assert_eq!(m.nrows(), m.ncols());
    if m.nrows() == 0 {
        return Vec::new().into_iter();
    }
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
        .iter()
        .copied()
        .collect::<Vec<_>>()
        .into_iter()
}

/// Largest real part over the (possibly complex) spectrum of a general
/// square matrix.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> f64 {
    debug_assert_eq!(m.nrows(), m.ncols());
    if m.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// 2-norm condition number via singular values; `f64::INFINITY` for a
/// numerically rank-deficient matrix.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(0.0_f64, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Fixed-order pairwise summation. Used for Monte Carlo reductions so the
/// result does not depend on how work was split across threads.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

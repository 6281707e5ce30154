//! Dense complex helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Eigenvalues and unit-norm right eigenvectors of a general complex matrix.
///
/// Uses the complex Schur form `A = Q T Q*` and back-substitution on the
/// triangular factor. Nearly defective matrices give nearly parallel vectors.
pub fn eig(a: &CMatrix) -> (Vec<Complex64>, Vec<CVector>) {
    let n = a.nrows();
    let (q, t) = a.clone().schur().unpack();
    let values: Vec<Complex64> = (0..n).map(|k| t[(k, k)]).collect();
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut vectors = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = values[k];
        let mut y = CVector::zeros(n);
        y[k] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for j in (i + 1)..=k {
                s += t[(i, j)] * y[j];
            }
            let mut d = t[(i, i)] - lambda;
            if d.norm() < 1e-14 * scale {
                d = Complex64::new(1e-14 * scale, 0.0);
            }
            y[i] = -s / d;
        }
        let v = &q * y;
        let norm = v.norm();
        vectors.push(v / Complex64::new(norm, 0.0));
    }
    (values, vectors)
}

/// Eigenvalues only.
pub fn eigenvalues(a: &CMatrix) -> Vec<Complex64> {
    let t = a.clone().schur().unpack().1;
    (0..a.nrows()).map(|k| t[(k, k)]).collect()
}
